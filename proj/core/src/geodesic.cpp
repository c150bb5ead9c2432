#include "geoprior/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "geoprior/morphology.hpp"

namespace geoprior {

SeedKind SeedPolicy::for_class(ClassId c) const {
  switch (c) {
    case ClassId::LV: return lv;
    case ClassId::RV: return rv;
    case ClassId::MYO: return myo;
    case ClassId::Background: break;
  }
  throw std::invalid_argument("background has no seed policy");
}

namespace {

Mask component_mask(const Components& cc, int id, const Mask& like) {
  Mask m(like.dims(), like.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = cc.labels[i] == id ? 1 : 0;
  return m;
}

}  // namespace

SeedSet build_seeds(const Mask& object_mask, SeedKind kind) {
  if (empty(object_mask)) throw std::invalid_argument("build_seeds on an empty mask");
  // Fast marching is 6-connected, so every 6-component needs a seed of its own.
  const auto cc = connected_components(object_mask, Connectivity::Face6);
  SeedSet seeds;
  if (kind == SeedKind::CenterOfMass) {
    for (int id = 1; id <= cc.count; ++id) seeds.push_back(center_of_mass(component_mask(cc, id, object_mask)));
    return seeds;
  }
  const Mask skeleton = skeletonize(object_mask);
  std::vector<std::uint8_t> covered(cc.count + 1, 0);
  for (std::size_t i = 0; i < skeleton.size(); ++i) {
    if (!skeleton[i]) continue;
    seeds.push_back(grid_index(skeleton.dims(), i));
    covered[cc.labels[i]] = 1;
  }
  for (int id = 1; id <= cc.count; ++id) {
    if (!covered[id]) seeds.push_back(center_of_mass(component_mask(cc, id, object_mask)));
  }
  return seeds;
}

TimeMap object_geodesic(const Mask& object_mask, SeedKind kind, const Spacing& spacing) {
  const auto seeds = build_seeds(object_mask, kind);
  auto t = fast_march(object_mask, seeds, {}, spacing);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (object_mask[i] && !std::isfinite(t[i])) {
      throw std::logic_error("object voxel unreachable from its seeds");
    }
  }
  return t;
}

GeodesicResult compose_channels(const LabelMap& labels, const SeedPolicy& policy) {
  validate(labels);
  GeodesicResult out;
  for (ClassId c : kForegroundClasses) {
    const Mask mask = class_mask(labels, c);
    Volume channel(labels.dims(), labels.spacing(), 0.0f);
    if (empty(mask)) {
      out.warnings.push_back(std::string("class ") + class_name(c) + " is empty; channel left at zero");
    } else {
      const auto t = object_geodesic(mask, policy.for_class(c), labels.spacing());
      double peak = 0.0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (mask[i]) peak = std::max(peak, t[i]);
      }
      if (peak > 0.0) {
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (mask[i]) channel[i] = static_cast<float>(t[i] / peak);
        }
      }
    }
    out.map.channels.push_back(std::move(channel));
    out.map.channel_roles.emplace_back(class_name(c));
  }
  return out;
}

MultiChannelMap binary_channels(const LabelMap& labels) {
  MultiChannelMap m;
  for (ClassId c : kForegroundClasses) {
    const Mask mask = class_mask(labels, c);
    Volume channel(labels.dims(), labels.spacing(), 0.0f);
    for (std::size_t i = 0; i < mask.size(); ++i) channel[i] = mask[i];
    m.channels.push_back(std::move(channel));
    m.channel_roles.emplace_back(class_name(c));
  }
  return m;
}

}  // namespace geoprior
