// SPDX-License-Identifier: Apache-2.0
#pragma once

// Differentiable operators. Every function computes its forward value
// immediately and, when the tape is recording and an operand requires a
// gradient, registers the matching backward closure.

#include <cstddef>
#include <span>
#include <vector>

#include "shapefat/autodiff/tape.hpp"

namespace shapefat::ad {

/// 2-D cross-correlation with zero padding.
/// input N x C x H x W, weight K x C x kh x kw, bias K.
Var conv2d(Tape& tape, const Var& input, const Var& weight, const Var& bias, std::size_t stride,
           std::size_t pad);

enum class Mode { kTrain, kEval };

/// Per-channel running statistics for batch normalization.
struct BatchNormState {
  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, 0.0), running_var(channels, 1.0) {}

  std::vector<double> running_mean;
  std::vector<double> running_var;
  bool initialized = false;
  double momentum = 0.1;
  double eps = 1e-5;

  /// Marks the default (mean 0, variance 1) statistics as usable in eval mode.
  void initialize_identity();
};

/// Train mode normalizes with batch statistics over N, H, W and updates the
/// running statistics; eval mode uses the running statistics and throws if
/// they were never initialized.
Var batchnorm2d(Tape& tape, const Var& input, const Var& gamma, const Var& beta,
                BatchNormState& state, Mode mode);
/// Eval-mode normalization with read-only statistics.
Var batchnorm2d(Tape& tape, const Var& input, const Var& gamma, const Var& beta,
                const BatchNormState& state);

/// max(0, x); the subgradient at 0 is 0.
Var relu(Tape& tape, const Var& input);
Var sigmoid(Tape& tape, const Var& input);

/// N x C x H x W -> N x C spatial mean.
Var global_avg_pool(Tape& tape, const Var& input);

/// input N x D, weight D x M, bias M -> N x M.
Var fully_connected(Tape& tape, const Var& input, const Var& weight, const Var& bias);

/// Concatenates along axis 1. Accepts rank-2 (N x C) or rank-4 operands.
Var concat_channels(Tape& tape, const Var& a, const Var& b);
Var concat_channels(Tape& tape, std::span<const Var> parts);

/// Channels [begin, begin + count) of a rank-2 or rank-4 tensor.
Var slice_channels(Tape& tape, const Var& input, std::size_t begin, std::size_t count);

/// features N x C x H x W scaled per pixel by map N x 1 x H x W.
Var mul_broadcast(Tape& tape, const Var& features, const Var& map);

Var add(Tape& tape, const Var& a, const Var& b);
Var scale(Tape& tape, const Var& input, double factor);
/// Elementwise mean of equally shaped operands.
Var mean_of(Tape& tape, std::span<const Var> parts);
/// Sum of all elements, as a scalar of shape [1].
Var sum(Tape& tape, const Var& input);
/// sum_i weights[i] * input[i]; the weights are constants.
Var inner(Tape& tape, const Var& input, const Tensor& weights);
Var reshape(Tape& tape, const Var& input, Shape shape);
/// N x ... -> N x (product of remaining dims).
Var flatten(Tape& tape, const Var& input);

/// Mean over the batch of -log softmax(logits)[target]. logits N x K.
Var softmax_cross_entropy(Tape& tape, const Var& logits, std::span<const int> targets);
/// Mean squared difference; pred may be N or N x 1, target must hold N values.
Var mse_loss(Tape& tape, const Var& pred, const Tensor& target);

}  // namespace shapefat::ad
