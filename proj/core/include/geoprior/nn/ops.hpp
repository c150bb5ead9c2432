#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "geoprior/nn/autograd.hpp"

namespace geoprior::nn {

/// 3x3x3 cross-correlation with zero "same" padding.
/// x: (N, Cin, Z, Y, X), w: (Cout, Cin, 3, 3, 3), b: (Cout, 1, 1, 1, 1).
Var conv3d(const Var& x, const Var& w, const Var& b);

/// 2x2 max pooling in the x-y plane, stride 2; z untouched. Needs even nx, ny.
Var maxpool_xy(const Var& x);

/// x2 bilinear upsampling in the x-y plane (half-pixel centers, edge clamped).
Var upsample_bilinear_xy(const Var& x);

struct BatchNormState {
  Tensor running_mean;  // (C, 1, 1, 1, 1)
  Tensor running_var;
  double momentum = 0.9;  // weight kept on the old running value
  double eps = 1e-5;
};

/// Per-channel normalization over (batch, z, y, x). Training mode updates `state`.
Var batchnorm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state, bool train);

Var leaky_relu(const Var& x, double alpha);

Var concat_channels(std::span<const Var> xs);

/// Channels [begin, end).
Var slice_channels(const Var& x, int begin, int end);

Var reshape(const Var& x, Shape s);

/// Affine map on each flattened sample. w: (Fout, Fin, 1, 1, 1), b: (Fout, 1, 1, 1, 1).
/// Output (N, Fout, 1, 1, 1).
Var fully_connected(const Var& x, const Var& w, const Var& b);

Var softmax_channels(const Var& x);

/// Mean over voxels of -log softmax(logits)[target]. `target` holds one class ID per
/// (n, z, y, x), laid out like a one-channel tensor.
Var softmax_ce(const Var& logits, std::span<const std::uint8_t> target);

/// Mean squared difference over all elements.
Var mse(const Var& a, const Var& b);

Var add(const Var& a, const Var& b);
Var scale(const Var& a, double s);

}  // namespace geoprior::nn
