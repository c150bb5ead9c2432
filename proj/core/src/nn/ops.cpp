#include "geoprior/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace geoprior::nn {

namespace {

using ColMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeError(msg);
}

struct Tap {
  int dz, dy, dx;
};

constexpr std::array<Tap, 27> make_taps() {
  std::array<Tap, 27> taps{};
  int t = 0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) taps[t++] = {dz, dy, dx};
  return taps;
}
constexpr auto kTaps = make_taps();

// Valid output range along one axis of length n for shift d: o in [lo, hi) with o+d in range.
inline int lo_of(int d) { return std::max(0, -d); }
inline int hi_of(int n, int d) { return std::min(n, n - d); }

// Sums in a fixed 8-lane order so results do not depend on buffer alignment.
double lane_sum(const double* p, std::size_t n) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int k = 0; k < 8; ++k) acc[k] += p[i + k];
  double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < n; ++i) s += p[i];
  return s;
}

double lane_sq_dev(const double* p, std::size_t n, double mean) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int k = 0; k < 8; ++k) acc[k] += (p[i + k] - mean) * (p[i + k] - mean);
  double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < n; ++i) s += (p[i] - mean) * (p[i] - mean);
  return s;
}

double lane_dot(const double* a, const double* b, std::size_t n) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
  double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

// Each sample is a column-major (voxels x Cin) matrix. One GEMM against all 27 taps at once,
// Q = X * W_all with W_all(ci, t*Cout + co) = w[co, ci, t], then out[v, co] = sum_t Q[v + s_t, t*Cout + co].
// The backward pass builds R[v', t*Cout + co] = dOut[v' - s_t, co] and reuses it for both
// dX = R * W_all^T and dW_all = X^T * R.
Var conv3d(const Var& x, const Var& w, const Var& b) {
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  require(ws.z == 3 && ws.y == 3 && ws.x == 3, "conv3d expects a 3x3x3 kernel, got " + ws.str());
  require(ws.c == xs.c, "conv3d channel mismatch: input " + xs.str() + ", weight " + ws.str());
  require(b.shape().numel() == static_cast<std::size_t>(ws.n), "conv3d bias length mismatch");
  const int cin = xs.c, cout = ws.n, nz = xs.z, ny = xs.y, nx = xs.x;
  const auto nv = static_cast<Eigen::Index>(xs.spatial());

  ColMatrix wall(cin, 27 * cout);
  const double* wp = w.value().data();
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci)
      for (int t = 0; t < 27; ++t) wall(ci, t * cout + co) = wp[(static_cast<std::size_t>(co) * cin + ci) * 27 + t];

  Tensor out({xs.n, cout, nz, ny, nx});
  ColMatrix q(nv, 27 * cout);
  for (int n = 0; n < xs.n; ++n) {
    Eigen::Map<const ColMatrix> xm(x.value().data() + static_cast<std::size_t>(n) * cin * nv, nv, cin);
    q.noalias() = xm * wall;
    for (int co = 0; co < cout; ++co) {
      double* dst = out.data() + (static_cast<std::size_t>(n) * cout + co) * nv;
      std::fill(dst, dst + nv, b.value()[co]);
      for (int t = 0; t < 27; ++t) {
        const auto [dz, dy, dx] = kTaps[t];
        const double* src = q.col(t * cout + co).data();
        for (int z = lo_of(dz); z < hi_of(nz, dz); ++z)
          for (int y = lo_of(dy); y < hi_of(ny, dy); ++y) {
            double* drow = dst + (static_cast<std::size_t>(z) * ny + y) * nx;
            const double* srow = src + (static_cast<std::size_t>(z + dz) * ny + (y + dy)) * nx + dx;
            for (int xx = lo_of(dx); xx < hi_of(nx, dx); ++xx) drow[xx] += srow[xx];
          }
      }
    }
  }

  return make_node(std::move(out), {x, w, b}, [x, w, b, wall = std::move(wall), cin, cout, nz, ny, nx, nv](Node& self) {
    const Tensor& g = self.grad;
    const int batch = g.shape().n;
    const bool need_x = x.requires_grad(), need_w = w.requires_grad(), need_b = b.requires_grad();
    ColMatrix r(nv, 27 * cout);
    ColMatrix dwall = ColMatrix::Zero(cin, 27 * cout);
    for (int n = 0; n < batch; ++n) {
      const double* gn = g.data() + static_cast<std::size_t>(n) * cout * nv;
      if (need_b) {
        Tensor& db = b.node().grad_buffer();
        for (int co = 0; co < cout; ++co) {
          db[co] += lane_sum(gn + co * nv, static_cast<std::size_t>(nv));
        }
      }
      if (!need_x && !need_w) continue;
      r.setZero();
      for (int co = 0; co < cout; ++co) {
        const double* gc = gn + co * nv;
        for (int t = 0; t < 27; ++t) {
          const auto [dz, dy, dx] = kTaps[t];
          double* col = r.col(t * cout + co).data();
          for (int z = lo_of(dz); z < hi_of(nz, dz); ++z)
            for (int y = lo_of(dy); y < hi_of(ny, dy); ++y) {
              const double* grow = gc + (static_cast<std::size_t>(z) * ny + y) * nx;
              double* rrow = col + (static_cast<std::size_t>(z + dz) * ny + (y + dy)) * nx + dx;
              for (int xx = lo_of(dx); xx < hi_of(nx, dx); ++xx) rrow[xx] = grow[xx];
            }
        }
      }
      if (need_w) {
        Eigen::Map<const ColMatrix> xm(x.value().data() + static_cast<std::size_t>(n) * cin * nv, nv, cin);
        dwall.noalias() += xm.transpose() * r;
      }
      if (need_x) {
        Eigen::Map<ColMatrix> dxm(x.node().grad_buffer().data() + static_cast<std::size_t>(n) * cin * nv, nv, cin);
        dxm.noalias() += r * wall.transpose();
      }
    }
    if (need_w) {
      double* dw = w.node().grad_buffer().data();
      for (int co = 0; co < cout; ++co)
        for (int ci = 0; ci < cin; ++ci)
          for (int t = 0; t < 27; ++t) dw[(static_cast<std::size_t>(co) * cin + ci) * 27 + t] += dwall(ci, t * cout + co);
    }
  });
}

Var maxpool_xy(const Var& x) {
  const Shape s = x.shape();
  require(s.x % 2 == 0 && s.y % 2 == 0, "maxpool_xy needs even nx and ny, got " + s.str());
  const Shape os{s.n, s.c, s.z, s.y / 2, s.x / 2};
  Tensor out(os);
  std::vector<std::size_t> argmax(os.numel());
  const double* in = x.value().data();
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int z = 0; z < s.z; ++z)
        for (int y = 0; y < os.y; ++y)
          for (int xx = 0; xx < os.x; ++xx, ++o) {
            const std::size_t base = (((static_cast<std::size_t>(n) * s.c + c) * s.z + z) * s.y + 2 * y) * s.x + 2 * xx;
            std::size_t best = base;
            for (std::size_t cand : {base + 1, base + s.x, base + s.x + 1}) {
              if (in[cand] > in[best]) best = cand;
            }
            out[o] = in[best];
            argmax[o] = best;
          }
  return make_node(std::move(out), {x}, [x, argmax = std::move(argmax)](Node& self) {
    Tensor& dx = x.node().grad_buffer();
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += self.grad[i];
  });
}

namespace {

struct Interp {
  std::vector<int> i0, i1;
  std::vector<double> w0, w1;
};

Interp upsample_weights(int n_in) {
  Interp ip;
  const int n_out = 2 * n_in;
  for (int i = 0; i < n_out; ++i) {
    const double src = std::max(0.0, (i + 0.5) / 2.0 - 0.5);
    const int a = std::min(static_cast<int>(std::floor(src)), n_in - 1);
    const int bidx = std::min(a + 1, n_in - 1);
    const double frac = src - a;
    ip.i0.push_back(a);
    ip.i1.push_back(bidx);
    ip.w0.push_back(1.0 - frac);
    ip.w1.push_back(frac);
  }
  return ip;
}

}  // namespace

// Separable: interpolate along x into a (ny, 2nx) scratch plane, then blend scratch rows along y.
Var upsample_bilinear_xy(const Var& x) {
  const Shape s = x.shape();
  const Shape os{s.n, s.c, s.z, 2 * s.y, 2 * s.x};
  const Interp iy = upsample_weights(s.y), ix = upsample_weights(s.x);
  Tensor out(os);
  const std::size_t planes = static_cast<std::size_t>(s.n) * s.c * s.z;
  const std::size_t in_plane = static_cast<std::size_t>(s.y) * s.x, out_plane = static_cast<std::size_t>(os.y) * os.x;
  std::vector<double> tmp(static_cast<std::size_t>(s.y) * os.x);
  const double* in = x.value().data();
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = in + p * in_plane;
    for (int y = 0; y < s.y; ++y) {
      const double* row = src + static_cast<std::size_t>(y) * s.x;
      double* t = tmp.data() + static_cast<std::size_t>(y) * os.x;
      for (int xx = 0; xx < os.x; ++xx) t[xx] = ix.w0[xx] * row[ix.i0[xx]] + ix.w1[xx] * row[ix.i1[xx]];
    }
    double* dst = out.data() + p * out_plane;
    for (int y = 0; y < os.y; ++y) {
      const double* r0 = tmp.data() + static_cast<std::size_t>(iy.i0[y]) * os.x;
      const double* r1 = tmp.data() + static_cast<std::size_t>(iy.i1[y]) * os.x;
      const double a = iy.w0[y], b = iy.w1[y];
      double* d = dst + static_cast<std::size_t>(y) * os.x;
      for (int xx = 0; xx < os.x; ++xx) d[xx] = a * r0[xx] + b * r1[xx];
    }
  }
  return make_node(std::move(out), {x}, [x, iy, ix, planes, in_plane, out_plane, s, os](Node& self) {
    Tensor& dx = x.node().grad_buffer();
    std::vector<double> tmp(static_cast<std::size_t>(s.y) * os.x);
    for (std::size_t p = 0; p < planes; ++p) {
      const double* g = self.grad.data() + p * out_plane;
      std::fill(tmp.begin(), tmp.end(), 0.0);
      for (int y = 0; y < os.y; ++y) {
        double* t0 = tmp.data() + static_cast<std::size_t>(iy.i0[y]) * os.x;
        double* t1 = tmp.data() + static_cast<std::size_t>(iy.i1[y]) * os.x;
        const double a = iy.w0[y], b = iy.w1[y];
        const double* grow = g + static_cast<std::size_t>(y) * os.x;
        for (int xx = 0; xx < os.x; ++xx) t0[xx] += a * grow[xx];
        for (int xx = 0; xx < os.x; ++xx) t1[xx] += b * grow[xx];
      }
      double* d = dx.data() + p * in_plane;
      for (int y = 0; y < s.y; ++y) {
        const double* t = tmp.data() + static_cast<std::size_t>(y) * os.x;
        double* row = d + static_cast<std::size_t>(y) * s.x;
        for (int xx = 0; xx < os.x; ++xx) {
          row[ix.i0[xx]] += ix.w0[xx] * t[xx];
          row[ix.i1[xx]] += ix.w1[xx] * t[xx];
        }
      }
    }
  });
}

Var batchnorm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state, bool train) {
  const Shape s = x.shape();
  const int channels = s.c;
  require(gamma.shape().numel() == static_cast<std::size_t>(channels) &&
              beta.shape().numel() == static_cast<std::size_t>(channels),
          "batchnorm parameter length mismatch for input " + s.str());
  if (s.n == 0) throw ShapeError("batchnorm on an empty batch");
  if (state.running_mean.numel() != static_cast<std::size_t>(channels)) {
    state.running_mean = Tensor({channels, 1, 1, 1, 1}, 0.0);
    state.running_var = Tensor({channels, 1, 1, 1, 1}, 1.0);
  }
  const std::size_t nv = s.spatial();
  const std::size_t m = static_cast<std::size_t>(s.n) * nv;
  Tensor out(s);
  Tensor xhat(s);
  std::vector<double> inv_std(channels);
  const double* in = x.value().data();
  for (int c = 0; c < channels; ++c) {
    double mean, var;
    if (train) {
      double sum = 0.0;
      for (int n = 0; n < s.n; ++n) {
        sum += lane_sum(in + (static_cast<std::size_t>(n) * channels + c) * nv, nv);
      }
      mean = sum / m;
      double ss = 0.0;
      for (int n = 0; n < s.n; ++n) {
        ss += lane_sq_dev(in + (static_cast<std::size_t>(n) * channels + c) * nv, nv, mean);
      }
      var = ss / m;
      const double unbiased = m > 1 ? ss / (m - 1) : var;
      state.running_mean[c] = state.momentum * state.running_mean[c] + (1.0 - state.momentum) * mean;
      state.running_var[c] = state.momentum * state.running_var[c] + (1.0 - state.momentum) * unbiased;
    } else {
      mean = state.running_mean[c];
      var = state.running_var[c];
    }
    inv_std[c] = 1.0 / std::sqrt(var + state.eps);
    const double gm = gamma.value()[c], bt = beta.value()[c];
    for (int n = 0; n < s.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * channels + c) * nv;
      for (std::size_t v = 0; v < nv; ++v) {
        const double h = (in[off + v] - mean) * inv_std[c];
        xhat[off + v] = h;
        out[off + v] = gm * h + bt;
      }
    }
  }
  return make_node(std::move(out), {x, gamma, beta},
                   [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), train, s, nv, m](Node& self) {
    const Tensor& g = self.grad;
    for (int c = 0; c < s.c; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (int n = 0; n < s.n; ++n) {
        const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * nv;
        sum_g += lane_sum(g.data() + off, nv);
        sum_gx += lane_dot(g.data() + off, xhat.data() + off, nv);
      }
      if (gamma.requires_grad()) gamma.node().grad_buffer()[c] += sum_gx;
      if (beta.requires_grad()) beta.node().grad_buffer()[c] += sum_g;
      if (!x.requires_grad()) continue;
      Tensor& dx = x.node().grad_buffer();
      const double k = gamma.value()[c] * inv_std[c];
      const double mean_g = sum_g / m, mean_gx = sum_gx / m;
      for (int n = 0; n < s.n; ++n) {
        const std::size_t off = (static_cast<std::size_t>(n) * s.c + c) * nv;
        for (std::size_t v = 0; v < nv; ++v) {
          dx[off + v] += train ? k * (g[off + v] - mean_g - xhat[off + v] * mean_gx) : k * g[off + v];
        }
      }
    }
  });
}

Var leaky_relu(const Var& x, double alpha) {
  Tensor out(x.shape());
  const double* in = x.value().data();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = in[i] >= 0.0 ? in[i] : alpha * in[i];
  return make_node(std::move(out), {x}, [x, alpha](Node& self) {
    Tensor& dx = x.node().grad_buffer();
    const double* in = x.value().data();
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += in[i] >= 0.0 ? self.grad[i] : alpha * self.grad[i];
  });
}

Var concat_channels(std::span<const Var> xs) {
  require(!xs.empty(), "concat_channels of nothing");
  const Shape s0 = xs[0].shape();
  int channels = 0;
  for (const auto& v : xs) {
    const Shape s = v.shape();
    require(s.n == s0.n && s.z == s0.z && s.y == s0.y && s.x == s0.x,
            "concat_channels shape mismatch: " + s0.str() + " vs " + s.str());
    channels += s.c;
  }
  const Shape os{s0.n, channels, s0.z, s0.y, s0.x};
  Tensor out(os);
  const std::size_t nv = s0.spatial();
  std::vector<int> offsets;
  int c0 = 0;
  for (const auto& v : xs) {
    offsets.push_back(c0);
    const int c = v.shape().c;
    for (int n = 0; n < s0.n; ++n) {
      const double* src = v.value().data() + static_cast<std::size_t>(n) * c * nv;
      std::copy(src, src + c * nv, out.data() + (static_cast<std::size_t>(n) * channels + c0) * nv);
    }
    c0 += c;
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return make_node(std::move(out), inputs, [inputs, offsets, channels, nv](Node& self) {
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (!inputs[k].requires_grad()) continue;
      Tensor& d = inputs[k].node().grad_buffer();
      const int c = inputs[k].shape().c;
      for (int n = 0; n < inputs[k].shape().n; ++n) {
        const double* g = self.grad.data() + (static_cast<std::size_t>(n) * channels + offsets[k]) * nv;
        double* dst = d.data() + static_cast<std::size_t>(n) * c * nv;
        for (std::size_t i = 0; i < c * nv; ++i) dst[i] += g[i];
      }
    }
  });
}

Var slice_channels(const Var& x, int begin, int end) {
  const Shape s = x.shape();
  require(0 <= begin && begin < end && end <= s.c, "slice_channels range out of bounds for " + s.str());
  const Shape os{s.n, end - begin, s.z, s.y, s.x};
  const std::size_t nv = s.spatial();
  Tensor out(os);
  for (int n = 0; n < s.n; ++n) {
    const double* src = x.value().data() + (static_cast<std::size_t>(n) * s.c + begin) * nv;
    std::copy(src, src + os.c * nv, out.data() + static_cast<std::size_t>(n) * os.c * nv);
  }
  return make_node(std::move(out), {x}, [x, s, os, begin, nv](Node& self) {
    Tensor& dx = x.node().grad_buffer();
    for (int n = 0; n < s.n; ++n) {
      const double* g = self.grad.data() + static_cast<std::size_t>(n) * os.c * nv;
      double* d = dx.data() + (static_cast<std::size_t>(n) * s.c + begin) * nv;
      for (std::size_t i = 0; i < os.c * nv; ++i) d[i] += g[i];
    }
  });
}

Var reshape(const Var& x, Shape s) {
  Tensor out = x.value().reshaped(s);
  return make_node(std::move(out), {x}, [x](Node& self) {
    Tensor& dx = x.node().grad_buffer();
    for (std::size_t i = 0; i < dx.numel(); ++i) dx[i] += self.grad[i];
  });
}

Var fully_connected(const Var& x, const Var& w, const Var& b) {
  const Shape xs = x.shape();
  const int fin = static_cast<int>(xs.per_sample());
  const int fout = w.shape().n;
  require(w.shape().per_sample() == static_cast<std::size_t>(fin),
          "fully_connected weight " + w.shape().str() + " does not match input " + xs.str());
  require(b.shape().numel() == static_cast<std::size_t>(fout), "fully_connected bias length mismatch");
  Tensor out({xs.n, fout, 1, 1, 1});
  Eigen::Map<const RowMatrix> xm(x.value().data(), xs.n, fin);
  Eigen::Map<const RowMatrix> wm(w.value().data(), fout, fin);
  Eigen::Map<RowMatrix> om(out.data(), xs.n, fout);
  om.noalias() = xm * wm.transpose();
  for (int n = 0; n < xs.n; ++n)
    for (int f = 0; f < fout; ++f) om(n, f) += b.value()[f];
  return make_node(std::move(out), {x, w, b}, [x, w, b, fin, fout, batch = xs.n](Node& self) {
    Eigen::Map<const RowMatrix> g(self.grad.data(), batch, fout);
    if (x.requires_grad()) {
      Eigen::Map<const RowMatrix> wm(w.value().data(), fout, fin);
      Eigen::Map<RowMatrix> dx(x.node().grad_buffer().data(), batch, fin);
      dx.noalias() += g * wm;
    }
    if (w.requires_grad()) {
      Eigen::Map<const RowMatrix> xm(x.value().data(), batch, fin);
      Eigen::Map<RowMatrix> dw(w.node().grad_buffer().data(), fout, fin);
      dw.noalias() += g.transpose() * xm;
    }
    if (b.requires_grad()) {
      Tensor& db = b.node().grad_buffer();
      for (int n = 0; n < batch; ++n)
        for (int f = 0; f < fout; ++f) db[f] += g(n, f);
    }
  });
}

namespace {

void softmax_into(const Tensor& logits, Tensor& probs) {
  const Shape s = logits.shape();
  const std::size_t nv = s.spatial();
  std::vector<double> mx(nv), sum(nv);
  for (int n = 0; n < s.n; ++n) {
    const double* in = logits.data() + static_cast<std::size_t>(n) * s.c * nv;
    double* out = probs.data() + static_cast<std::size_t>(n) * s.c * nv;
    std::fill(mx.begin(), mx.end(), -std::numeric_limits<double>::infinity());
    for (int c = 0; c < s.c; ++c)
      for (std::size_t v = 0; v < nv; ++v) mx[v] = std::max(mx[v], in[c * nv + v]);
    std::fill(sum.begin(), sum.end(), 0.0);
    for (int c = 0; c < s.c; ++c)
      for (std::size_t v = 0; v < nv; ++v) {
        const double e = std::exp(in[c * nv + v] - mx[v]);
        out[c * nv + v] = e;
        sum[v] += e;
      }
    for (int c = 0; c < s.c; ++c)
      for (std::size_t v = 0; v < nv; ++v) out[c * nv + v] /= sum[v];
  }
}

void require_finite(const Tensor& t, const char* what) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw NumericalError(std::string(what) + " received a non-finite value");
  }
}

}  // namespace

Var softmax_channels(const Var& x) {
  Tensor out(x.shape());
  softmax_into(x.value(), out);
  Tensor probs = out;
  return make_node(std::move(out), {x}, [x, probs = std::move(probs)](Node& self) {
    const Shape s = probs.shape();
    const std::size_t nv = s.spatial();
    Tensor& dx = x.node().grad_buffer();
    for (int n = 0; n < s.n; ++n) {
      const std::size_t base = static_cast<std::size_t>(n) * s.c * nv;
      for (std::size_t v = 0; v < nv; ++v) {
        double dot = 0.0;
        for (int c = 0; c < s.c; ++c) dot += probs[base + c * nv + v] * self.grad[base + c * nv + v];
        for (int c = 0; c < s.c; ++c) {
          const std::size_t i = base + c * nv + v;
          dx[i] += probs[i] * (self.grad[i] - dot);
        }
      }
    }
  });
}

Var softmax_ce(const Var& logits, std::span<const std::uint8_t> target) {
  const Shape s = logits.shape();
  const std::size_t nv = s.spatial();
  const std::size_t m = static_cast<std::size_t>(s.n) * nv;
  require(target.size() == m, "softmax_ce target has " + std::to_string(target.size()) + " voxels, logits " + s.str());
  require_finite(logits.value(), "softmax_ce");
  Tensor probs(s);
  softmax_into(logits.value(), probs);
  double loss = 0.0;
  for (int n = 0; n < s.n; ++n)
    for (std::size_t v = 0; v < nv; ++v) {
      const int t = target[n * nv + v];
      require(t < s.c, "softmax_ce target class out of range");
      // log-softmax from the stabilized logits
      const double* in = logits.value().data() + static_cast<std::size_t>(n) * s.c * nv;
      double mx = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < s.c; ++c) mx = std::max(mx, in[c * nv + v]);
      double sum = 0.0;
      for (int c = 0; c < s.c; ++c) sum += std::exp(in[c * nv + v] - mx);
      loss -= in[t * nv + v] - mx - std::log(sum);
    }
  loss /= static_cast<double>(m);
  std::vector<std::uint8_t> labels(target.begin(), target.end());
  return make_node(Tensor({1, 1, 1, 1, 1}, loss), {logits},
                   [logits, probs = std::move(probs), labels = std::move(labels), s, nv, m](Node& self) {
    const double g = self.grad[0] / static_cast<double>(m);
    Tensor& dx = logits.node().grad_buffer();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * nv;
        for (std::size_t v = 0; v < nv; ++v) {
          const double onehot = labels[n * nv + v] == c ? 1.0 : 0.0;
          dx[base + v] += g * (probs[base + v] - onehot);
        }
      }
  });
}

Var mse(const Var& a, const Var& b) {
  require(a.shape() == b.shape(), "mse shape mismatch: " + a.shape().str() + " vs " + b.shape().str());
  require_finite(a.value(), "mse");
  require_finite(b.value(), "mse");
  const std::size_t n = a.value().numel();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a.value()[i] - b.value()[i];
    sum += d * d;
  }
  return make_node(Tensor({1, 1, 1, 1, 1}, sum / n), {a, b}, [a, b, n](Node& self) {
    const double g = 2.0 * self.grad[0] / static_cast<double>(n);
    if (a.requires_grad()) {
      Tensor& da = a.node().grad_buffer();
      for (std::size_t i = 0; i < n; ++i) da[i] += g * (a.value()[i] - b.value()[i]);
    }
    if (b.requires_grad()) {
      Tensor& db = b.node().grad_buffer();
      for (std::size_t i = 0; i < n; ++i) db[i] -= g * (a.value()[i] - b.value()[i]);
    }
  });
}

Var add(const Var& a, const Var& b) {
  require(a.shape() == b.shape(), "add shape mismatch: " + a.shape().str() + " vs " + b.shape().str());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_node(std::move(out), {a, b}, [a, b](Node& self) {
    for (const Var* v : {&a, &b}) {
      if (!v->requires_grad()) continue;
      Tensor& d = v->node().grad_buffer();
      for (std::size_t i = 0; i < d.numel(); ++i) d[i] += self.grad[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = s * a.value()[i];
  return make_node(std::move(out), {a}, [a, s](Node& self) {
    Tensor& d = a.node().grad_buffer();
    for (std::size_t i = 0; i < d.numel(); ++i) d[i] += s * self.grad[i];
  });
}

}  // namespace geoprior::nn
