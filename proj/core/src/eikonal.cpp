#include "geoprior/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>

namespace geoprior {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using HeapEntry = std::pair<double, std::size_t>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

void check_seeds(const Mask& domain, const SeedSet& seeds) {
  if (seeds.empty()) throw EikonalError("empty seed set");
  for (const auto& s : seeds) {
    if (!domain.dims().contains(s) || !domain.at(s)) {
      throw EikonalError("seed (" + std::to_string(s.x) + ", " + std::to_string(s.y) + ", " +
                         std::to_string(s.z) + ") lies outside the domain");
    }
  }
}

double speed_at(const SpeedField& speed, std::size_t idx) {
  if (const auto* v = std::get_if<Volume>(&speed)) return (*v)[idx];
  return 1.0;
}

}  // namespace

double godunov_update(const std::array<std::optional<double>, 3>& neighbor_mins,
                      const Spacing& spacing, double f) {
  if (!(f > 0.0)) throw EikonalError("speed must be positive");
  std::array<std::pair<double, double>, 3> terms;
  int n = 0;
  for (int axis = 0; axis < 3; ++axis) {
    if (neighbor_mins[axis]) terms[n++] = {*neighbor_mins[axis], spacing[axis]};
  }
  if (n == 0) throw EikonalError("godunov_update needs at least one accepted neighbor");
  std::sort(terms.begin(), terms.begin() + n);

  const double rhs = 1.0 / (f * f);
  double t = terms[0].first + terms[0].second / f;
  double a = 0.0, b = 0.0, c = 0.0;
  {
    const double w = 1.0 / (terms[0].second * terms[0].second);
    a += w;
    b += -2.0 * w * terms[0].first;
    c += w * terms[0].first * terms[0].first;
  }
  for (int m = 1; m < n; ++m) {
    const auto [v, h] = terms[m];
    if (t <= v) break;
    const double w = 1.0 / (h * h);
    const double a2 = a + w, b2 = b - 2.0 * w * v, c2 = c + w * v * v - rhs;
    const double disc = b2 * b2 - 4.0 * a2 * c2;
    if (disc < 0.0) break;
    t = (-b2 + std::sqrt(disc)) / (2.0 * a2);
    a = a2;
    b = b2;
    c = c2 + rhs;
  }
  return t;
}

TimeMap fast_march(const Mask& domain, const SeedSet& seeds, const SpeedField& speed,
                   const Spacing& spacing, MarchStats* stats) {
  check_seeds(domain, seeds);
  const auto& d = domain.dims();
  if (const auto* v = std::get_if<Volume>(&speed)) {
    if (v->dims() != d) throw EikonalError("speed field dims do not match the domain");
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (domain[i] && !((*v)[i] > 0.0f)) throw EikonalError("speed must be positive inside the domain");
    }
  }

  TimeMap t(d, spacing, kInf);
  std::vector<std::uint8_t> known(d.voxels(), 0);
  MinHeap heap;
  for (const auto& s : seeds) {
    const auto i = linear_index(d, s.x, s.y, s.z);
    t[i] = 0.0;
    heap.emplace(0.0, i);
  }

  const std::array<std::size_t, 3> stride = {1, static_cast<std::size_t>(d.nx),
                                             static_cast<std::size_t>(d.nx) * d.ny};
  const std::array<int, 3> extent = {d.nx, d.ny, d.nz};

  auto accepted_min_along = [&](std::size_t q, const Index3& qp, int axis) -> std::optional<double> {
    const int coord = axis == 0 ? qp.x : (axis == 1 ? qp.y : qp.z);
    double best = kInf;
    if (coord > 0 && known[q - stride[axis]]) best = std::min(best, t[q - stride[axis]]);
    if (coord + 1 < extent[axis] && known[q + stride[axis]]) best = std::min(best, t[q + stride[axis]]);
    if (best == kInf) return std::nullopt;
    return best;
  };

  double last = 0.0;
  MarchStats local;
  while (!heap.empty()) {
    const auto [value, i] = heap.top();
    heap.pop();
    if (known[i] || value != t[i]) {
      ++local.stale_pops;
      continue;
    }
    if (value < last) throw std::logic_error("fast_march accepted values out of order");
    last = value;
    known[i] = 1;
    ++local.accepted;

    const Index3 p = grid_index(d, i);
    for (int axis = 0; axis < 3; ++axis) {
      const int coord = axis == 0 ? p.x : (axis == 1 ? p.y : p.z);
      for (int dir : {-1, 1}) {
        if (coord + dir < 0 || coord + dir >= extent[axis]) continue;
        const std::size_t q = dir < 0 ? i - stride[axis] : i + stride[axis];
        if (known[q] || !domain[q]) continue;
        const Index3 qp = grid_index(d, q);
        const std::array<std::optional<double>, 3> mins = {accepted_min_along(q, qp, 0),
                                                           accepted_min_along(q, qp, 1),
                                                           accepted_min_along(q, qp, 2)};
        const double cand = godunov_update(mins, spacing, speed_at(speed, q));
        if (cand < t[q]) {
          t[q] = cand;
          heap.emplace(cand, q);
        }
      }
    }
  }
  if (stats) *stats = local;
  return t;
}

TimeMap dijkstra_oracle(const Mask& domain, const SeedSet& seeds, const Spacing& spacing) {
  check_seeds(domain, seeds);
  const auto& d = domain.dims();
  TimeMap t(d, spacing, kInf);
  std::vector<std::uint8_t> done(d.voxels(), 0);
  MinHeap heap;
  for (const auto& s : seeds) {
    const auto i = linear_index(d, s.x, s.y, s.z);
    t[i] = 0.0;
    heap.emplace(0.0, i);
  }
  while (!heap.empty()) {
    const auto [value, i] = heap.top();
    heap.pop();
    if (done[i] || value != t[i]) continue;
    done[i] = 1;
    const Index3 p = grid_index(d, i);
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!(dx || dy || dz)) continue;
          const Index3 q{p.x + dx, p.y + dy, p.z + dz};
          if (!d.contains(q) || !domain.at(q)) continue;
          const auto j = linear_index(d, q.x, q.y, q.z);
          if (done[j]) continue;
          const double w = std::sqrt(dx * dx * spacing.sx * spacing.sx + dy * dy * spacing.sy * spacing.sy +
                                     dz * dz * spacing.sz * spacing.sz);
          if (value + w < t[j]) {
            t[j] = value + w;
            heap.emplace(t[j], j);
          }
        }
  }
  return t;
}

Volume to_volume(const TimeMap& t) {
  Volume v(t.dims(), t.spacing());
  for (std::size_t i = 0; i < t.size(); ++i) {
    v[i] = std::isfinite(t[i]) ? static_cast<float>(t[i]) : std::numeric_limits<float>::max();
  }
  return v;
}

}  // namespace geoprior
