// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dual-input regression network.
//
//   frontal, lateral (N x 1 x S x S)
//     -> per-view input phase (stride-2 conv-BN-ReLU stacks)
//     -> channel concat -> residual stages -> F_res (N x C x h x w)
//     -> global average pool -> shared head -> fat prediction
//
// The attention module projects F_res to K sigmoid maps M^k, refines
// F_att^k = F_res * M^k, and feeds the shared head with the mean of the
// pooled refined features (regression component). The classification
// component scores grade k from the pooled F_att^k with a dedicated linear
// layer. Only the backbone path runs at inference.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shapefat/autodiff/ops.hpp"
#include "shapefat/autodiff/optim.hpp"
#include "shapefat/model/config.hpp"
#include "shapefat/shape/label.hpp"

namespace shapefat::model {

struct ModelParams {
  ModelConfig config;
  ad::ParamSet params;
  std::map<std::string, ad::BatchNormState> batchnorm;
  /// Set by training or checkpoint loading; `predict` refuses untrained models.
  bool trained = false;

  /// True once every batch-norm layer has running statistics.
  bool has_running_stats() const;
  ModelParams clone() const;
};

/// Allocates and initializes all parameters of `config.variant`. Each tensor
/// draws from its own stream keyed by (seed, name), so shared layers start
/// identical across variants.
ModelParams build_model(const ModelConfig& config, std::uint64_t seed);

/// Bias of the final regression unit.
std::string output_bias_name(const ModelConfig& config);

/// Names of the parameters owned by the attention module.
std::vector<std::string> attention_parameter_names(const ModelParams& model);

struct ModelOutputs {
  ad::Var fat_pred;        // N
  ad::Var features;        // F_res, N x C x h x w (null for mlp)
  ad::Var pooled;          // N x C (null for mlp)
  ad::Var attention_maps;  // N x K x h x w
  std::vector<ad::Var> refined;  // K tensors N x C x h x w
  ad::Var att_fat_pred;    // N
  ad::Var grade_logits;    // N x K (proposed only)
};

/// Backbone and regression head. Train mode updates batch-norm statistics.
ModelOutputs forward_backbone(ad::Tape& tape, ModelParams& model, const ad::Var& frontal,
                              const ad::Var& lateral, ad::Mode mode);
/// Eval-mode backbone on read-only parameters.
ModelOutputs forward_backbone(ad::Tape& tape, const ModelParams& model, const ad::Var& frontal,
                              const ad::Var& lateral);

/// Fills attention_maps and refined from out.features. Throws ConfigError for
/// variants without attention.
void forward_attention(ad::Tape& tape, const ModelParams& model, ModelOutputs& out);

/// Fills att_fat_pred and, for the proposed variant, grade_logits.
void attention_heads(ad::Tape& tape, const ModelParams& model, ModelOutputs& out);

/// Complete training-time forward pass for the configured variant.
ModelOutputs forward(ad::Tape& tape, ModelParams& model, const ad::Var& frontal,
                     const ad::Var& lateral, ad::Mode mode);

struct Prediction {
  double fat_pct = 0.0;
  int grade = 0;
};

/// Backbone-only inference in eval mode. Throws if the model was never trained.
std::vector<Prediction> predict(const ModelParams& model, const ad::Tensor& frontal,
                                const ad::Tensor& lateral, const shape::FatCalib& calib);

}  // namespace shapefat::model
