#pragma once

#include <cstdint>
#include <string>

#include "geoprior/grid.hpp"
#include "geoprior/metrics.hpp"

namespace geoprior {

enum class NoiseLevel { Clean, L1, L2 };

std::string to_string(NoiseLevel level);
NoiseLevel parse_noise_level(const std::string& s);

struct NoiseSpec {
  NoiseLevel level = NoiseLevel::L1;
  int erosion_radius = 1;      // per-slice disk
  double pepper_prob = 0.30;   // flip probability for shell and outer-band voxels
  std::uint64_t rng_seed = 7;

  /// Calibrated defaults: L1 = disk(1), p=0.30; L2 = disk(2), p=0.20.
  static NoiseSpec defaults(NoiseLevel level, std::uint64_t seed = 7);
  void validate() const;
};

struct Shell {
  Mask core;
  Mask shell;
};

Shell extract_shell(const Mask& object_mask, int erosion_radius);

/// Shell corruption per class: keep the eroded core, drop shell voxels and add voxels of
/// the outer band (dilation ring) with probability p each, refill enclosed pepper holes
/// that lie entirely inside the shell/band, then merge classes with priority
/// MYO > LV > RV. `image_index` is XORed into the seed.
LabelMap synthesize_noisy(const LabelMap& labels, const NoiseSpec& spec, std::uint64_t image_index = 0);

/// Dice / Hausdorff of the noisy labels against the clean ones: the noise ceiling.
ClassScores upper_boundary(const LabelMap& noisy, const LabelMap& clean);

}  // namespace geoprior
