// SPDX-License-Identifier: Apache-2.0
#include "shapefat/autodiff/tape.hpp"

#include <algorithm>

#include "shapefat/error.hpp"

namespace shapefat::ad {

Var parameter(Tensor value) { return std::make_shared<Node>(std::move(value), true); }

Var constant(Tensor value) { return std::make_shared<Node>(std::move(value), false); }

Var Tape::record(Tensor out, std::span<const Var> inputs, Node::BackwardFn fn) {
  bool needs_grad = false;
  if (record_) {
    for (const Var& in : inputs) {
      if (in && in->requires_grad) {
        needs_grad = true;
        break;
      }
    }
  }
  auto node = std::make_shared<Node>(std::move(out), needs_grad);
  if (needs_grad) {
    if (consumed_) throw Error("cannot record on a tape that has already been backpropagated");
    node->backward_ = std::move(fn);
    nodes_.push_back(node);
  }
  return node;
}

void Tape::backward(const Var& loss) {
  if (consumed_) {
    throw Error("backward already ran on this tape; double backward is unsupported");
  }
  if (!loss) throw Error("backward called on a null value");
  if (loss->value.size() != 1) {
    throw ShapeError("backward requires a scalar loss, got shape " + to_string(loss->value.shape()));
  }
  if (!loss->requires_grad || !loss->backward_ ||
      std::find(nodes_.begin(), nodes_.end(), loss) == nodes_.end()) {
    throw Error("loss was not produced by a recorded computation on this tape");
  }
  consumed_ = true;
  loss->value.grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& node = **it;
    if (node.value.has_grad() && node.backward_) node.backward_(node);
  }
  for (auto& node : nodes_) node->backward_ = nullptr;
  nodes_.clear();
}

}  // namespace shapefat::ad
