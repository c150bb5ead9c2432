#include "geoprior/morphology.hpp"

#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace geoprior {

std::vector<Index3> StructuringElement::offsets() const {
  if (radius < 1) throw std::invalid_argument("structuring element radius must be >= 1");
  std::vector<Index3> out;
  switch (shape) {
    case Shape::Cross6:
      return {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
    case Shape::Cross4:
      return {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}};
    case Shape::Ball:
      for (int dz = -radius; dz <= radius; ++dz)
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx)
            if ((dx || dy || dz) && dx * dx + dy * dy + dz * dz <= radius * radius)
              out.push_back({dx, dy, dz});
      return out;
    case Shape::Disk:
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
          if ((dx || dy) && dx * dx + dy * dy <= radius * radius) out.push_back({dx, dy, 0});
      return out;
  }
  return out;
}

Mask erode(const Mask& mask, const StructuringElement& se) {
  const auto offs = se.offsets();
  const auto& d = mask.dims();
  Mask out(d, mask.spacing());
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        if (!mask.at(x, y, z)) continue;
        bool keep = true;
        for (const auto& o : offs) {
          const Index3 q{x + o.x, y + o.y, z + o.z};
          if (!d.contains(q) || !mask.at(q)) {
            keep = false;
            break;
          }
        }
        out.at(x, y, z) = keep ? 1 : 0;
      }
  return out;
}

Mask dilate(const Mask& mask, const StructuringElement& se) {
  const auto offs = se.offsets();
  const auto& d = mask.dims();
  Mask out = mask;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        if (!mask.at(x, y, z)) continue;
        for (const auto& o : offs) {
          const Index3 q{x + o.x, y + o.y, z + o.z};
          if (d.contains(q)) out.at(q) = 1;
        }
      }
  return out;
}

namespace {

// Marks background pixels of slice z that are 4-connected to the slice border.
std::vector<std::uint8_t> outside_background(const Mask& mask, int z) {
  const auto& d = mask.dims();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(d.nx) * d.ny, 0);
  std::deque<std::pair<int, int>> queue;
  auto visit = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * d.nx + x;
    if (seen[i] || mask.at(x, y, z)) return;
    seen[i] = 1;
    queue.emplace_back(x, y);
  };
  for (int x = 0; x < d.nx; ++x) {
    visit(x, 0);
    visit(x, d.ny - 1);
  }
  for (int y = 0; y < d.ny; ++y) {
    visit(0, y);
    visit(d.nx - 1, y);
  }
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    if (x > 0) visit(x - 1, y);
    if (x + 1 < d.nx) visit(x + 1, y);
    if (y > 0) visit(x, y - 1);
    if (y + 1 < d.ny) visit(x, y + 1);
  }
  return seen;
}

}  // namespace

Mask fill_holes(const Mask& mask) {
  const auto& d = mask.dims();
  Mask out = mask;
  for (int z = 0; z < d.nz; ++z) {
    const auto outside = outside_background(mask, z);
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x)
        if (!mask.at(x, y, z) && !outside[static_cast<std::size_t>(y) * d.nx + x]) out.at(x, y, z) = 1;
  }
  return out;
}

int count_holes_in_slice(const Mask& mask, int z) {
  const auto& d = mask.dims();
  auto seen = outside_background(mask, z);
  int holes = 0;
  for (int y0 = 0; y0 < d.ny; ++y0)
    for (int x0 = 0; x0 < d.nx; ++x0) {
      const std::size_t i0 = static_cast<std::size_t>(y0) * d.nx + x0;
      if (seen[i0] || mask.at(x0, y0, z)) continue;
      ++holes;
      std::deque<std::pair<int, int>> queue{{x0, y0}};
      seen[i0] = 1;
      while (!queue.empty()) {
        auto [x, y] = queue.front();
        queue.pop_front();
        const std::array<std::pair<int, int>, 4> nbrs{{{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}}};
        for (auto [u, v] : nbrs) {
          if (u < 0 || v < 0 || u >= d.nx || v >= d.ny) continue;
          const std::size_t j = static_cast<std::size_t>(v) * d.nx + u;
          if (seen[j] || mask.at(u, v, z)) continue;
          seen[j] = 1;
          queue.emplace_back(u, v);
        }
      }
    }
  return holes;
}

Components connected_components(const Mask& mask, Connectivity connectivity) {
  std::vector<Index3> offs;
  switch (connectivity) {
    case Connectivity::Face6: offs = StructuringElement::cross6().offsets(); break;
    case Connectivity::Slice4: offs = StructuringElement::cross4().offsets(); break;
    case Connectivity::Full26:
    case Connectivity::Slice8:
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (!(dx || dy || dz)) continue;
            if (connectivity == Connectivity::Slice8 && dz != 0) continue;
            offs.push_back({dx, dy, dz});
          }
      break;
  }
  const auto& d = mask.dims();
  Components cc{Grid<int>(d, mask.spacing(), 0), 0};
  std::deque<Index3> queue;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] || cc.labels[i]) continue;
    const int id = ++cc.count;
    cc.labels[i] = id;
    queue.push_back(grid_index(d, i));
    while (!queue.empty()) {
      const Index3 p = queue.front();
      queue.pop_front();
      for (const auto& o : offs) {
        const Index3 q{p.x + o.x, p.y + o.y, p.z + o.z};
        if (!d.contains(q) || !mask.at(q) || cc.labels.at(q)) continue;
        cc.labels.at(q) = id;
        queue.push_back(q);
      }
    }
  }
  return cc;
}

Index3 center_of_mass(const Mask& mask) {
  const auto& d = mask.dims();
  double sx = 0, sy = 0, sz = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const auto p = grid_index(d, i);
    sx += p.x;
    sy += p.y;
    sz += p.z;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("center_of_mass of an empty mask");
  const double cx = sx / n, cy = sy / n, cz = sz / n;
  const Index3 rounded{static_cast<int>(std::lround(cx)), static_cast<int>(std::lround(cy)),
                       static_cast<int>(std::lround(cz))};
  if (mask.at(rounded)) return rounded;
  double best = std::numeric_limits<double>::infinity();
  Index3 snapped;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const auto p = grid_index(d, i);
    const double dist = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy) + (p.z - cz) * (p.z - cz);
    if (dist < best) {
      best = dist;
      snapped = p;
    }
  }
  return snapped;
}

namespace {

// Ring order N, NE, E, SE, S, SW, W, NW (y grows "south").
constexpr std::array<int, 8> kRingDx = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kRingDy = {-1, -1, 0, 1, 1, 1, 0, -1};

class SliceView {
 public:
  SliceView(Mask& m, int z) : m_(m), z_(z) {}
  bool fg(int x, int y) const {
    const auto& d = m_.dims();
    return x >= 0 && y >= 0 && x < d.nx && y < d.ny && m_.at(x, y, z_);
  }
  void clear(int x, int y) { m_.at(x, y, z_) = 0; }

 private:
  Mask& m_;
  int z_;
};

std::array<bool, 8> ring(const SliceView& s, int x, int y) {
  std::array<bool, 8> r{};
  for (int k = 0; k < 8; ++k) r[k] = s.fg(x + kRingDx[k], y + kRingDy[k]);
  return r;
}

// Components among ring positions under the given adjacency; when `touching_p_only`,
// only components that contain an edge neighbor (even ring index) are counted.
int ring_components(const std::array<bool, 8>& present, bool eight_connected, bool touching_p_only) {
  std::array<int, 8> label{};
  int count = 0;
  for (int s = 0; s < 8; ++s) {
    if (!present[s] || label[s]) continue;
    bool touches = false;
    ++count;
    std::array<int, 8> stack{};
    int top = 0;
    stack[top++] = s;
    label[s] = count;
    while (top) {
      const int k = stack[--top];
      if (k % 2 == 0) touches = true;
      for (int j = 0; j < 8; ++j) {
        if (!present[j] || label[j]) continue;
        const int dx = std::abs(kRingDx[j] - kRingDx[k]);
        const int dy = std::abs(kRingDy[j] - kRingDy[k]);
        const bool adjacent = eight_connected ? (dx <= 1 && dy <= 1) : (dx + dy == 1);
        if (!adjacent) continue;
        label[j] = count;
        stack[top++] = j;
      }
    }
    if (touching_p_only && !touches) --count;
  }
  return count;
}

bool is_simple(const std::array<bool, 8>& r) {
  std::array<bool, 8> bg{};
  for (int k = 0; k < 8; ++k) bg[k] = !r[k];
  return ring_components(r, true, false) == 1 && ring_components(bg, false, true) == 1;
}

int neighbor_count(const std::array<bool, 8>& r) {
  int n = 0;
  for (bool b : r) n += b;
  return n;
}

bool removable(const SliceView& s, int x, int y, int dir) {
  if (!s.fg(x, y)) return false;
  const auto r = ring(s, x, y);
  if (r[dir]) return false;  // not a border point in this direction
  return neighbor_count(r) >= 2 && is_simple(r);
}

}  // namespace

Mask skeletonize(const Mask& mask) {
  Mask out = mask;
  const auto& d = mask.dims();
  // Directions N, S, E, W as ring indices.
  constexpr std::array<int, 4> kDirs = {0, 4, 2, 6};
  for (int z = 0; z < d.nz; ++z) {
    SliceView s(out, z);
    bool changed = true;
    while (changed) {
      changed = false;
      for (int dir : kDirs) {
        std::vector<std::pair<int, int>> candidates;
        for (int y = 0; y < d.ny; ++y)
          for (int x = 0; x < d.nx; ++x)
            if (removable(s, x, y, dir)) candidates.emplace_back(x, y);
        for (auto [x, y] : candidates) {
          if (removable(s, x, y, dir)) {
            s.clear(x, y);
            changed = true;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace geoprior
