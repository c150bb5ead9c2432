#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "geoprior/grid.hpp"
#include "geoprior/nn/autograd.hpp"
#include "geoprior/nn/ops.hpp"
#include "geoprior/rng.hpp"

namespace geoprior::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("geoprior-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline nn::Tensor random_tensor(nn::Shape s, Rng& rng, double scale = 1.0) {
  nn::Tensor t(s);
  for (auto& v : t.values()) v = scale * rng.normal();
  return t;
}

/// sum_i r_i * y_i, so every output element receives a distinct upstream gradient.
inline nn::Var project(const nn::Var& y, const nn::Tensor& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.numel(); ++i) s += r[i] * y.value()[i];
  nn::Tensor out(nn::Shape{1, 1, 1, 1, 1}, s);
  return nn::make_node(std::move(out), {y}, [r](nn::Node& node) {
    auto& x = *node.inputs[0];
    if (!x.requires_grad) return;
    auto& g = x.grad_buffer();
    const double up = node.grad[0];
    for (std::size_t i = 0; i < r.numel(); ++i) g[i] += up * r[i];
  });
}

struct GradCheck {
  double max_rel_error = 0.0;  // worst over inputs of ||g_fd - g_an|| / max(||g_fd||, ||g_an||)
  std::size_t checked = 0;
};

/// Central differences of the scalar `f` against reverse-mode gradients, per input.
/// At most `max_entries` coordinates per input are perturbed (chosen at random).
inline GradCheck check_gradients(const std::function<nn::Var(const std::vector<nn::Var>&)>& f,
                                 std::vector<nn::Tensor> inputs, std::uint64_t seed = 1,
                                 double h = 1e-6, std::size_t max_entries = 400) {
  std::vector<nn::Var> vars;
  for (auto& t : inputs) vars.push_back(nn::leaf(t, true));
  nn::Var loss = f(vars);
  nn::backward(loss);

  GradCheck out;
  Rng rng(seed);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::size_t n = inputs[k].numel();
    std::vector<std::size_t> coords(n);
    for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    if (n > max_entries) {
      std::shuffle(coords.begin(), coords.end(), rng.engine());
      coords.resize(max_entries);
    }
    double diff2 = 0.0, an2 = 0.0, fd2 = 0.0;
    for (std::size_t i : coords) {
      auto eval = [&](double delta) {
        std::vector<nn::Var> probe;
        for (std::size_t j = 0; j < inputs.size(); ++j) {
          nn::Tensor t = inputs[j];
          if (j == k) t[i] += delta;
          probe.push_back(nn::leaf(std::move(t), false));
        }
        return f(probe).value()[0];
      };
      const double fd = (eval(h) - eval(-h)) / (2.0 * h);
      const double an = vars[k].has_grad() ? vars[k].grad()[i] : 0.0;
      diff2 += (fd - an) * (fd - an);
      an2 += an * an;
      fd2 += fd * fd;
      ++out.checked;
    }
    const double denom = std::max({std::sqrt(an2), std::sqrt(fd2), 1e-12});
    out.max_rel_error = std::max(out.max_rel_error, std::sqrt(diff2) / denom);
  }
  return out;
}

/// O(|A||B|) Hausdorff distance between voxel-center sets, mm.
inline std::optional<double> brute_hausdorff(const Mask& a, const Mask& b) {
  std::vector<std::array<double, 3>> pa, pb;
  const auto& s = a.spacing();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Index3 p = grid_index(a.dims(), i);
    if (a[i]) pa.push_back({p.x * s.sx, p.y * s.sy, p.z * s.sz});
    if (b[i]) pb.push_back({p.x * s.sx, p.y * s.sy, p.z * s.sz});
  }
  if (pa.empty() || pb.empty()) return std::nullopt;
  auto directed = [](const auto& from, const auto& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        const double d = (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                         (p[2] - q[2]) * (p[2] - q[2]);
        best = std::min(best, d);
      }
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

/// Independent Bernoulli voxels.
inline Mask random_mask(Dims d, Spacing s, double p, Rng& rng) {
  Mask m(d, s);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.bernoulli(p) ? 1 : 0;
  return m;
}

inline Mask box(Dims d, Spacing s, Index3 lo, Index3 hi) {
  Mask m(d, s);
  for (int z = lo.z; z <= hi.z; ++z)
    for (int y = lo.y; y <= hi.y; ++y)
      for (int x = lo.x; x <= hi.x; ++x) m.at(x, y, z) = 1;
  return m;
}

/// Voxels with inner <= distance from (cx, cy) <= outer, on every slice.
inline Mask annulus(Dims d, double cx, double cy, double inner, double outer) {
  Mask m(d, Spacing{});
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const double r = std::hypot(x - cx, y - cy);
        if (r >= inner && r <= outer) m.at(x, y, z) = 1;
      }
  return m;
}

inline Mask disk(Dims d, double cx, double cy, double radius) { return annulus(d, cx, cy, -1.0, radius); }

}  // namespace geoprior::testing
