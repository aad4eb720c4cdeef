// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "shapefat/autodiff/tensor.hpp"

namespace shapefat::ad {

class Tape;

/// A value in the computation graph. Leaves are created by the caller
/// (parameters, inputs); interior nodes are created by operators and owned by
/// the tape that recorded them.
class Node {
 public:
  using BackwardFn = std::function<void(Node& self)>;

  explicit Node(Tensor v, bool grad = false) : value(std::move(v)), requires_grad(grad) {}

  Tensor value;
  bool requires_grad = false;

 private:
  friend class Tape;
  BackwardFn backward_;
};

using Var = std::shared_ptr<Node>;

/// Leaf that receives gradients (a trainable parameter).
Var parameter(Tensor value);
/// Leaf that never receives gradients (inputs, targets).
Var constant(Tensor value);

/// Single-owner record of one forward pass.
///
/// Operators append a node with its backward closure when at least one input
/// requires a gradient and recording is enabled. `backward` replays the
/// closures in reverse creation order, which is a valid topological order
/// because every operand exists before its consumers. A tape can be
/// backpropagated exactly once; the closures are released afterwards.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Wraps `out` in a node whose gradient is propagated by `fn`.
  Var record(Tensor out, std::span<const Var> inputs, Node::BackwardFn fn);
  Var record(Tensor out, std::initializer_list<Var> inputs, Node::BackwardFn fn) {
    return record(std::move(out), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
  }

  /// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every node
  /// reachable from `loss`. Leaf gradients are summed, never overwritten.
  void backward(const Var& loss);

 private:
  bool record_;
  bool consumed_ = false;
  std::vector<Var> nodes_;
};

}  // namespace shapefat::ad
