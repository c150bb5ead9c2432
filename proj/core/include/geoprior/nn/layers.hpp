#pragma once

#include <memory>
#include <string>
#include <vector>

#include "geoprior/nn/ops.hpp"
#include "geoprior/rng.hpp"

namespace geoprior::nn {

/// Trainable tensor with its Adam moments.
struct Parameter {
  std::string name;
  Var var;
  Tensor m;
  Tensor v;
  long step = 0;

  Parameter(std::string n, Tensor value);
  const Shape& shape() const { return var.shape(); }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update per parameter. Throws std::logic_error when a
/// parameter has no gradient.
void adam_step(const std::vector<Parameter*>& params, const AdamConfig& cfg = {});
void zero_grad(const std::vector<Parameter*>& params);

/// Owns parameters and batch-norm statistics so they can be enumerated for
/// optimization and checkpointing.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Tensor value);
  BatchNormState& add_bn_state(const std::string& name);

  std::vector<Parameter*> parameters() const;
  const std::vector<std::pair<std::string, std::unique_ptr<BatchNormState>>>& bn_states() const { return bn_; }
  std::size_t parameter_count() const;

  /// Every tensor that defines the model: parameters, then running means/vars.
  std::vector<std::pair<std::string, Tensor*>> named_tensors();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::vector<std::pair<std::string, std::unique_ptr<BatchNormState>>> bn_;
};

/// He-normal init for leaky ReLU: std = sqrt(2 / ((1 + alpha^2) fan_in)).
Tensor he_normal(Shape s, int fan_in, double alpha, Rng& rng);

class Conv3dLayer {
 public:
  Conv3dLayer(ParameterStore& store, const std::string& name, int cin, int cout, double alpha, Rng& rng);
  Var operator()(const Var& x) const;
  int out_channels() const { return cout_; }

 private:
  Parameter* w_;
  Parameter* b_;
  int cout_;
};

class BatchNormLayer {
 public:
  BatchNormLayer(ParameterStore& store, const std::string& name, int channels);
  Var operator()(const Var& x, bool train) const;

 private:
  Parameter* gamma_;
  Parameter* beta_;
  BatchNormState* state_;
};

class LinearLayer {
 public:
  LinearLayer(ParameterStore& store, const std::string& name, int fin, int fout, double alpha, Rng& rng);
  Var operator()(const Var& x) const;

 private:
  Parameter* w_;
  Parameter* b_;
};

struct DenseBlockConfig {
  int layers = 2;   // L
  int growth = 4;   // k
  int first_filters = 8;

  void validate() const;
};

/// L x [concat(previous) -> BN -> leaky ReLU -> conv3d(k)].
class DenseBlock {
 public:
  struct Output {
    Var all;       // input followed by every layer output: in + L*k channels
    Var produced;  // the L*k new channels only
  };

  DenseBlock(ParameterStore& store, const std::string& name, int channels_in, const DenseBlockConfig& cfg,
             double alpha, Rng& rng);
  Output operator()(const Var& x, bool train) const;

  int channels_in() const { return cin_; }
  int channels_out() const { return cin_ + static_cast<int>(convs_.size()) * growth_; }

 private:
  int cin_;
  int growth_;
  double alpha_;
  std::vector<BatchNormLayer> norms_;
  std::vector<Conv3dLayer> convs_;
};

/// Channel count after a dense block.
constexpr int dense_block_channels(int channels_in, int layers, int growth) { return channels_in + layers * growth; }

}  // namespace geoprior::nn
