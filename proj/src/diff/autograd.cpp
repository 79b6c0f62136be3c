#include "zdc/diff/autograd.hpp"

#include <algorithm>
#include <unordered_set>

#include "zdc/errors.hpp"

namespace zdc::diff {

Tensor& Node::grad_buffer() {
  if (grad.empty()) grad = Tensor(value.shape(), 0.0f);
  return grad;
}

Var Var::leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

void Var::zero_grad() const {
  if (!node_->grad.empty()) node_->grad.fill(0.0f);
}

Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward) {
  if (!value.all_finite()) throw NumericError("non-finite value produced by an operation");
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& v : inputs) node->inputs.push_back(v.node());
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

void backward(const Var& root) {
  if (!root.defined()) throw ContractError("backward on an undefined variable");
  if (root.value().size() != 1) throw ContractError("backward needs a scalar root, got " + to_string(root.shape()));
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

}  // namespace zdc::diff
