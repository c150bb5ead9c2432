#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "geoprior/nn/tensor.hpp"

namespace geoprior::nn {

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  /// Zero-initialized gradient buffer of the value's shape.
  Tensor& grad_buffer();
};

/// Handle to a node of the reverse-mode graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& ptr() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

  void zero_grad() {
    if (node_) node_->grad = Tensor();
  }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

 private:
  std::shared_ptr<Node> node_;
};

/// Graph leaf; parameters pass requires_grad=true.
Var leaf(Tensor value, bool requires_grad = false);

/// Interior node. The backward closure is dropped when no input requires a gradient or
/// while a NoGradGuard is alive.
Var make_node(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward);

/// Runs reverse accumulation from a scalar.
void backward(const Var& loss);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace geoprior::nn
