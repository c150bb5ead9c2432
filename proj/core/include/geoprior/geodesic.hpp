#pragma once

#include <array>
#include <string>
#include <vector>

#include "geoprior/eikonal.hpp"
#include "geoprior/grid.hpp"

namespace geoprior {

enum class SeedKind { CenterOfMass, Skeleton };

/// Seed choice per foreground class. Closed objects use their centroid, the annular
/// myocardium uses its skeleton.
struct SeedPolicy {
  SeedKind lv = SeedKind::CenterOfMass;
  SeedKind rv = SeedKind::CenterOfMass;
  SeedKind myo = SeedKind::Skeleton;

  SeedKind for_class(ClassId c) const;
};

/// Center of mass: one seed per 6-connected component. Skeleton: every skeleton voxel,
/// plus a centroid for any 6-component the skeleton misses (diagonal-only joints).
SeedSet build_seeds(const Mask& object_mask, SeedKind kind);

/// Fast march inside the object with F=1. +infinity outside the object.
TimeMap object_geodesic(const Mask& object_mask, SeedKind kind, const Spacing& spacing);

struct GeodesicResult {
  MultiChannelMap map;  // channels LV, RV, MYO in [0,1]
  std::vector<std::string> warnings;
};

/// G = F_geo(B): per-class geodesic maps, each normalized by its own maximum, zero
/// outside the object. An empty class yields an all-zero channel and a warning.
GeodesicResult compose_channels(const LabelMap& labels, const SeedPolicy& policy = {});

/// Three binary foreground channels (LV, RV, MYO); the binary-prior input.
MultiChannelMap binary_channels(const LabelMap& labels);

}  // namespace geoprior
