#include "geoprior/label_noise.hpp"

#include <array>
#include <deque>
#include <stdexcept>

#include "geoprior/morphology.hpp"
#include "geoprior/rng.hpp"

namespace geoprior {

std::string to_string(NoiseLevel level) {
  switch (level) {
    case NoiseLevel::Clean: return "clean";
    case NoiseLevel::L1: return "L1";
    case NoiseLevel::L2: return "L2";
  }
  return "?";
}

NoiseLevel parse_noise_level(const std::string& s) {
  if (s == "clean") return NoiseLevel::Clean;
  if (s == "L1") return NoiseLevel::L1;
  if (s == "L2") return NoiseLevel::L2;
  throw std::invalid_argument("unknown noise level '" + s + "' (expected clean, L1 or L2)");
}

NoiseSpec NoiseSpec::defaults(NoiseLevel level, std::uint64_t seed) {
  switch (level) {
    case NoiseLevel::L1: return {NoiseLevel::L1, 1, 0.30, seed};
    case NoiseLevel::L2: return {NoiseLevel::L2, 2, 0.20, seed};
    case NoiseLevel::Clean: break;
  }
  throw std::invalid_argument("clean labels have no noise spec");
}

void NoiseSpec::validate() const {
  if (erosion_radius < 1) throw std::invalid_argument("erosion_radius must be >= 1");
  if (!(pepper_prob >= 0.0 && pepper_prob <= 1.0)) throw std::invalid_argument("pepper_prob must lie in [0,1]");
}

Shell extract_shell(const Mask& object_mask, int erosion_radius) {
  Shell s;
  s.core = erode(object_mask, StructuringElement::disk(erosion_radius));
  s.shell = mask_difference(object_mask, s.core);
  return s;
}

namespace {

// Fills per-slice background holes of `mask` whose every voxel lies in `allowed`.
void fill_holes_within(Mask& mask, const Mask& allowed) {
  const auto& d = mask.dims();
  const Mask filled = fill_holes(mask);
  std::vector<std::uint8_t> seen(d.voxels(), 0);
  std::vector<std::size_t> component;
  for (std::size_t i0 = 0; i0 < mask.size(); ++i0) {
    if (seen[i0] || mask[i0] || !filled[i0]) continue;
    // BFS over this hole (4-connected within the slice).
    component.clear();
    bool inside = true;
    std::deque<std::size_t> queue{i0};
    seen[i0] = 1;
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      component.push_back(i);
      if (!allowed[i]) inside = false;
      const Index3 p = grid_index(d, i);
      const std::array<Index3, 4> nbrs{{{p.x - 1, p.y, p.z}, {p.x + 1, p.y, p.z}, {p.x, p.y - 1, p.z}, {p.x, p.y + 1, p.z}}};
      for (const auto& q : nbrs) {
        if (!d.contains(q)) continue;
        const auto j = linear_index(d, q.x, q.y, q.z);
        if (seen[j] || mask[j]) continue;
        seen[j] = 1;
        queue.push_back(j);
      }
    }
    if (inside) {
      for (auto i : component) mask[i] = 1;
    }
  }
}

}  // namespace

LabelMap synthesize_noisy(const LabelMap& labels, const NoiseSpec& spec, std::uint64_t image_index) {
  spec.validate();
  validate(labels);
  Rng rng(spec.rng_seed ^ image_index);
  const auto disk = StructuringElement::disk(spec.erosion_radius);

  std::array<Mask, 3> corrupted;
  for (int k = 0; k < 3; ++k) {
    const Mask mask = class_mask(labels, kForegroundClasses[k]);
    const auto [core, shell] = extract_shell(mask, spec.erosion_radius);
    const Mask band = mask_difference(dilate(mask, disk), mask);
    Mask out = core;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (shell[i]) {
        out[i] = rng.bernoulli(spec.pepper_prob) ? 0 : 1;
      } else if (band[i]) {
        out[i] = rng.bernoulli(spec.pepper_prob) ? 1 : 0;
      }
    }
    // Holes may only be refilled over this object's shell or plain background, never over
    // another class (the LV cavity inside the myocardium is a hole too).
    const Mask background = class_mask(labels, ClassId::Background);
    fill_holes_within(out, mask_union(shell, mask_intersection(band, background)));
    corrupted[k] = std::move(out);
  }

  LabelMap noisy(labels.dims(), labels.spacing(), 0);
  // Paint lowest priority first: RV, then LV, then MYO.
  for (int k : {1, 0, 2}) {
    const auto id = static_cast<std::uint8_t>(kForegroundClasses[k]);
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      if (corrupted[k][i]) noisy[i] = id;
    }
  }
  return noisy;
}

ClassScores upper_boundary(const LabelMap& noisy, const LabelMap& clean) {
  return score_labels(noisy, clean);
}

}  // namespace geoprior
