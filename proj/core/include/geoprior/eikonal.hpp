#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "geoprior/grid.hpp"

namespace geoprior {

class EikonalError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform F=1 (std::monostate) or a per-voxel positive speed.
using SpeedField = std::variant<std::monostate, Volume>;

/// Arrival times; +infinity marks voxels the front never reached.
using TimeMap = Field;

using SeedSet = std::vector<Index3>;

/// Upwind solve of sum_axes ((T - v_i)/h_i)^2 = 1/f^2 over the axes that have an accepted
/// neighbor. Axes are added in ascending order of v_i; an axis whose value the candidate
/// does not exceed is left out.
double godunov_update(const std::array<std::optional<double>, 3>& neighbor_mins,
                      const Spacing& spacing, double f);

struct MarchStats {
  std::size_t accepted = 0;
  std::size_t stale_pops = 0;
};

/// First-order Fast Marching on the 6-connected voxel grid restricted to `domain`.
/// Equal arrival times are finalized in linear-index order.
TimeMap fast_march(const Mask& domain, const SeedSet& seeds, const SpeedField& speed,
                   const Spacing& spacing, MarchStats* stats = nullptr);

/// Exact shortest paths on the 26-neighbor voxel graph with Euclidean edge lengths (mm).
TimeMap dijkstra_oracle(const Mask& domain, const SeedSet& seeds, const Spacing& spacing);

/// +infinity becomes the largest finite float so the result fits a GPV1 payload.
Volume to_volume(const TimeMap& t);

}  // namespace geoprior
