#pragma once

#include <cstddef>
#include <vector>

#include "geoprior/grid.hpp"

namespace geoprior {

/// Structuring element in voxel units. The 2D variants act within each z-slice.
struct StructuringElement {
  enum class Shape { Cross6, Ball, Cross4, Disk };

  Shape shape = Shape::Disk;
  int radius = 1;

  static StructuringElement cross6() { return {Shape::Cross6, 1}; }
  static StructuringElement ball(int r) { return {Shape::Ball, r}; }
  static StructuringElement cross4() { return {Shape::Cross4, 1}; }
  static StructuringElement disk(int r) { return {Shape::Disk, r}; }

  /// Neighbor offsets, origin excluded.
  std::vector<Index3> offsets() const;
};

/// Voxels outside the grid count as background.
Mask erode(const Mask& mask, const StructuringElement& se = StructuringElement::disk(1));
Mask dilate(const Mask& mask, const StructuringElement& se = StructuringElement::disk(1));

/// Per z-slice: background not 4-connected to the slice border becomes foreground.
Mask fill_holes(const Mask& mask);

enum class Connectivity { Face6, Full26, Slice4, Slice8 };

struct Components {
  Grid<int> labels;  // 0 = background, otherwise 1..count
  int count = 0;
};

/// Slice4/Slice8 never connect across z.
Components connected_components(const Mask& mask, Connectivity connectivity);

/// Rounded mean foreground index, snapped to the nearest foreground voxel when it lands
/// on background. Ties go to the lowest linear index.
Index3 center_of_mass(const Mask& mask);

/// Per-slice topology-preserving thinning (8-connected foreground, 4-connected
/// background): border points are peeled in four directional sub-iterations and a
/// voxel is only removed when it is simple and not an end point.
Mask skeletonize(const Mask& mask);

/// Number of background 4-components per slice that do not touch the slice border.
int count_holes_in_slice(const Mask& mask, int z);

}  // namespace geoprior
