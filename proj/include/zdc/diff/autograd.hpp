#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "zdc/diff/tensor.hpp"

namespace zdc::diff {

/// One value on the tape. `backward` reads `grad` and accumulates into the
/// gradients of `inputs`; it is only set when some input requires a gradient.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  /// Gradient buffer, zero-initialized on first use.
  Tensor& grad_buffer();
};

/// Shared handle to a tape node. Copies alias the same node.
class Var {
 public:
  Var() = default;

  static Var leaf(Tensor value, bool requires_grad = false);
  static Var constant(Tensor value) { return leaf(std::move(value), false); }

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  Tensor& grad_buffer() const { return node_->grad_buffer(); }
  void zero_grad() const;

  /// Same value, cut from the tape.
  Var detach() const { return constant(node_->value); }

  const std::shared_ptr<Node>& node() const noexcept { return node_; }

 private:
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  friend Var make_result(Tensor, std::vector<Var>, std::function<void(Node&)>);

  std::shared_ptr<Node> node_;
};

/// Builds an op result. The backward closure and input references are kept
/// only when an input requires a gradient, so inference builds no graph.
/// Throws NumericError when the value contains NaN or infinity.
Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward);

/// Reverse sweep from a scalar root; gradients accumulate into every
/// reachable node that requires one.
void backward(const Var& root);

}  // namespace zdc::diff
