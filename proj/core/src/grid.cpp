#include "geoprior/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace geoprior {

Spacing::Spacing(double x, double y, double z) : sx(x), sy(y), sz(z) {
  if (!(sx > 0.0 && sy > 0.0 && sz > 0.0) || !std::isfinite(sx) || !std::isfinite(sy) ||
      !std::isfinite(sz)) {
    std::ostringstream ss;
    ss << "invalid spacing (" << x << ", " << y << ", " << z << ")";
    throw std::invalid_argument(ss.str());
  }
}

Dims::Dims(int x, int y, int z) : nx(x), ny(y), nz(z) {
  if (nx <= 0 || ny <= 0 || nz <= 0) {
    std::ostringstream ss;
    ss << "invalid dims (" << x << ", " << y << ", " << z << ")";
    throw std::invalid_argument(ss.str());
  }
}

Index3 grid_index(const Dims& d, std::size_t idx) {
  Index3 p;
  p.x = static_cast<int>(idx % d.nx);
  idx /= d.nx;
  p.y = static_cast<int>(idx % d.ny);
  idx /= d.ny;
  p.z = static_cast<int>(idx % d.nz);
  return p;
}

std::array<double, 3> voxel_to_world(Index3 index, const Dims& dims, const Spacing& spacing) {
  if (!dims.contains(index)) {
    std::ostringstream ss;
    ss << "voxel (" << index.x << ", " << index.y << ", " << index.z << ") outside dims ("
       << dims.nx << ", " << dims.ny << ", " << dims.nz << ")";
    throw BoundsError(ss.str());
  }
  return {index.x * spacing.sx, index.y * spacing.sy, index.z * spacing.sz};
}

const char* class_name(ClassId c) {
  switch (c) {
    case ClassId::Background: return "background";
    case ClassId::LV: return "LV";
    case ClassId::RV: return "RV";
    case ClassId::MYO: return "MYO";
  }
  return "?";
}

void validate(const Volume& v) {
  for (float x : v.values()) {
    if (!std::isfinite(x)) throw std::invalid_argument("volume contains non-finite values");
  }
}

void validate(const LabelMap& labels) {
  for (auto x : labels.values()) {
    if (x >= kNumClasses) {
      throw std::invalid_argument("label value " + std::to_string(int(x)) + " not in {0,1,2,3}");
    }
  }
}

void validate(const Mask& mask) {
  for (auto x : mask.values()) {
    if (x > 1) throw std::invalid_argument("mask is not binary");
  }
}

Mask class_mask(const LabelMap& labels, ClassId c) {
  Mask m(labels.dims(), labels.spacing());
  const auto id = static_cast<std::uint8_t>(c);
  for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] == id ? 1 : 0;
  return m;
}

std::size_t count(const Mask& m) {
  return static_cast<std::size_t>(std::count(m.values().begin(), m.values().end(), 1));
}

bool empty(const Mask& m) { return count(m) == 0; }

namespace {
void require_same(const Mask& a, const Mask& b) {
  if (!a.same_geometry(b)) throw std::invalid_argument("mask geometry mismatch");
}
}  // namespace

bool subset_of(const Mask& a, const Mask& b) {
  require_same(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && !b[i]) return false;
  }
  return true;
}

Mask mask_union(const Mask& a, const Mask& b) {
  require_same(a, b);
  Mask out(a.dims(), a.spacing());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] | b[i]) ? 1 : 0;
  return out;
}

Mask mask_intersection(const Mask& a, const Mask& b) {
  require_same(a, b);
  Mask out(a.dims(), a.spacing());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] & b[i]) ? 1 : 0;
  return out;
}

Mask mask_difference(const Mask& a, const Mask& b) {
  require_same(a, b);
  Mask out(a.dims(), a.spacing());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && !b[i]) ? 1 : 0;
  return out;
}

void validate(const MultiChannelMap& m) {
  if (m.channels.empty()) throw std::invalid_argument("multichannel map has no channels");
  if (!m.channel_roles.empty() && m.channel_roles.size() != m.channels.size()) {
    throw std::invalid_argument("channel role count does not match channel count");
  }
  for (const auto& c : m.channels) {
    if (!c.same_geometry(m.channels.front())) {
      throw std::invalid_argument("channels disagree on dims/spacing");
    }
    validate(c);
  }
}

void validate_probabilities(const MultiChannelMap& m, double tol) {
  validate(m);
  const std::size_t n = m.channels.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& c : m.channels) s += c[i];
    if (std::abs(s - 1.0) > tol) {
      throw std::invalid_argument("probability channels do not sum to 1 at voxel " +
                                  std::to_string(i));
    }
  }
}

}  // namespace geoprior
