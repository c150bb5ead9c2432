#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "geoprior/grid.hpp"

namespace geoprior {

/// 2|A∩B| / (|A|+|B|); two empty masks score 1.
double dice(const Mask& pred, const Mask& ref);

/// Symmetric Hausdorff distance in mm between the foreground voxel-center sets.
/// std::nullopt when either set is empty.
std::optional<double> hausdorff(const Mask& pred, const Mask& ref);

/// Exact squared Euclidean distance (mm^2) to the nearest foreground voxel; +inf when
/// the mask is empty. Separable lower-envelope transform, anisotropic spacing.
Field squared_distance_transform(const Mask& mask);

struct ClassScores {
  std::array<double, 3> dice{};                  // LV, RV, MYO
  std::array<std::optional<double>, 3> hd{};     // mm
};

ClassScores score_labels(const LabelMap& pred, const LabelMap& ref);

struct ClassRow {
  std::string name;  // LV, RV, MYO or Ave.
  double di_mean = 0.0;
  double di_std = 0.0;
  double hd_mean = 0.0;  // NaN when every HD was undefined
  double hd_std = 0.0;
  std::size_t n_images = 0;
  std::size_t n_undefined_hd = 0;
};

/// Rows LV, RV, MYO, Ave. Ave. averages each image's class means.
struct ClassReport {
  std::vector<ClassRow> rows;
};

ClassReport aggregate(const std::vector<ClassScores>& per_image);

/// CSV header: method,noise_level,class,DI_mean,DI_std,HD_mean_mm,HD_std_mm,n_images,n_undefined_HD
std::string report_csv_header();
std::string report_csv_rows(const ClassReport& report, const std::string& method,
                            const std::string& noise_level);

}  // namespace geoprior
