// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "shapefat/autodiff/tape.hpp"

namespace shapefat::ad {

/// Named trainable parameters with their momentum buffers.
///
/// Iteration order is lexicographic by name, which fixes the update order.
class ParamSet {
 public:
  struct Entry {
    Var param;
    std::vector<double> velocity;
  };

  /// Registers a new parameter; throws ConfigError on a duplicate name.
  const Var& add(const std::string& name, Tensor init);
  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
  std::map<std::string, Entry>& entries() noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;

  void clear_grads();
  /// Deep copy: values, momentum; gradients are not copied.
  ParamSet clone() const;

 private:
  std::map<std::string, Entry> entries_;
};

/// v <- momentum * v + grad;  p <- p - lr * v;  gradients cleared afterwards.
/// Throws if any parameter carries no gradient.
void sgd_momentum_step(ParamSet& params, double lr, double momentum);

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before rescaling. Parameters without a gradient are skipped.
double clip_grad_norm(ParamSet& params, double max_norm);

/// Step-decay learning-rate schedule with momentum.
struct Schedule {
  double base_lr = 0.01;
  double decay_factor = 0.1;
  int decay_every = 20;
  double momentum = 0.9;

  void validate() const;
};

/// base_lr * decay_factor^floor(epoch / decay_every).
double lr_at_epoch(const Schedule& schedule, int epoch);

}  // namespace shapefat::ad
