#include "geoprior/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace geoprior::nn {

Parameter::Parameter(std::string n, Tensor value)
    : name(std::move(n)), m(value.shape(), 0.0), v(value.shape(), 0.0) {
  var = leaf(std::move(value), true);
}

void adam_step(const std::vector<Parameter*>& params, const AdamConfig& cfg) {
  for (Parameter* p : params) {
    if (!p->var.has_grad()) throw std::logic_error("adam_step: parameter '" + p->name + "' has no gradient");
  }
  for (Parameter* p : params) {
    ++p->step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p->step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p->step));
    const Tensor& g = p->var.grad();
    Tensor& w = p->var.mutable_value();
    for (std::size_t i = 0; i < w.numel(); ++i) {
      p->m[i] = cfg.beta1 * p->m[i] + (1.0 - cfg.beta1) * g[i];
      p->v[i] = cfg.beta2 * p->v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = p->m[i] / c1;
      const double vhat = p->v[i] / c2;
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void zero_grad(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->var.zero_grad();
}

Parameter& ParameterStore::add(const std::string& name, Tensor value) {
  params_.push_back(std::make_unique<Parameter>(name, std::move(value)));
  return *params_.back();
}

BatchNormState& ParameterStore::add_bn_state(const std::string& name) {
  bn_.emplace_back(name, std::make_unique<BatchNormState>());
  return *bn_.back().second;
}

std::vector<Parameter*> ParameterStore::parameters() const {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->var.value().numel();
  return n;
}

std::vector<std::pair<std::string, Tensor*>> ParameterStore::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto& p : params_) out.emplace_back(p->name, &p->var.mutable_value());
  for (auto& [name, st] : bn_) {
    out.emplace_back(name + ".running_mean", &st->running_mean);
    out.emplace_back(name + ".running_var", &st->running_var);
  }
  return out;
}

Tensor he_normal(Shape s, int fan_in, double alpha, Rng& rng) {
  Tensor t(s);
  const double sd = std::sqrt(2.0 / ((1.0 + alpha * alpha) * fan_in));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = sd * rng.normal();
  return t;
}

Conv3dLayer::Conv3dLayer(ParameterStore& store, const std::string& name, int cin, int cout, double alpha, Rng& rng)
    : cout_(cout) {
  w_ = &store.add(name + ".w", he_normal({cout, cin, 3, 3, 3}, cin * 27, alpha, rng));
  b_ = &store.add(name + ".b", Tensor({cout, 1, 1, 1, 1}, 0.0));
}

Var Conv3dLayer::operator()(const Var& x) const { return conv3d(x, w_->var, b_->var); }

BatchNormLayer::BatchNormLayer(ParameterStore& store, const std::string& name, int channels) {
  gamma_ = &store.add(name + ".gamma", Tensor({channels, 1, 1, 1, 1}, 1.0));
  beta_ = &store.add(name + ".beta", Tensor({channels, 1, 1, 1, 1}, 0.0));
  state_ = &store.add_bn_state(name);
  state_->running_mean = Tensor({channels, 1, 1, 1, 1}, 0.0);
  state_->running_var = Tensor({channels, 1, 1, 1, 1}, 1.0);
}

Var BatchNormLayer::operator()(const Var& x, bool train) const {
  return batchnorm(x, gamma_->var, beta_->var, *state_, train);
}

LinearLayer::LinearLayer(ParameterStore& store, const std::string& name, int fin, int fout, double alpha, Rng& rng) {
  w_ = &store.add(name + ".w", he_normal({fout, fin, 1, 1, 1}, fin, alpha, rng));
  b_ = &store.add(name + ".b", Tensor({fout, 1, 1, 1, 1}, 0.0));
}

Var LinearLayer::operator()(const Var& x) const { return fully_connected(x, w_->var, b_->var); }

void DenseBlockConfig::validate() const {
  if (layers < 1) throw std::invalid_argument("dense block needs at least one layer");
  if (growth < 1) throw std::invalid_argument("dense block growth rate must be positive");
  if (first_filters < 1) throw std::invalid_argument("first convolution needs at least one filter");
}

DenseBlock::DenseBlock(ParameterStore& store, const std::string& name, int channels_in, const DenseBlockConfig& cfg,
                       double alpha, Rng& rng)
    : cin_(channels_in), growth_(cfg.growth), alpha_(alpha) {
  cfg.validate();
  int c = channels_in;
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string ln = name + ".l" + std::to_string(l);
    norms_.emplace_back(store, ln + ".bn", c);
    convs_.emplace_back(store, ln + ".conv", c, cfg.growth, alpha, rng);
    c += cfg.growth;
  }
  if (c != dense_block_channels(channels_in, cfg.layers, cfg.growth)) {
    throw std::logic_error("dense block channel bookkeeping failed in " + name);
  }
}

DenseBlock::Output DenseBlock::operator()(const Var& x, bool train) const {
  if (x.shape().c != cin_) {
    throw ShapeError("dense block expects " + std::to_string(cin_) + " channels, got " + x.shape().str());
  }
  std::vector<Var> features{x};
  std::vector<Var> produced;
  Var current = x;
  for (std::size_t l = 0; l < convs_.size(); ++l) {
    Var h = convs_[l](leaky_relu(norms_[l](current, train), alpha_));
    features.push_back(h);
    produced.push_back(h);
    current = concat_channels(features);
  }
  Var fresh = produced.size() == 1 ? produced.front() : concat_channels(produced);
  if (current.shape().c != channels_out()) throw std::logic_error("dense block produced the wrong channel count");
  return {current, fresh};
}

}  // namespace geoprior::nn
