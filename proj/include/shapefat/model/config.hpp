// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace shapefat::model {

/// plain_backbone: backbone + regression head only.
/// baseline:       adds the attention module's regression component.
/// proposed:       adds both the regression and the classification component.
/// mlp:            two fully connected layers on the flattened maps.
enum class Variant { kPlainBackbone, kBaseline, kProposed, kMlp };

std::string_view to_string(Variant v);
/// Accepts the canonical names plus "plain" for plain_backbone.
Variant parse_variant(std::string_view name);
bool has_attention(Variant v);
bool has_classification(Variant v);

struct LossWeights {
  double reg = 1.0;      // lambda_1
  double att_reg = 0.5;  // alpha_1
  double att_cls = 0.5;  // alpha_2
};

struct StagePlan {
  std::size_t channels = 16;
  std::size_t blocks = 2;
};

struct ModelConfig {
  std::size_t input_size = 64;
  /// One stride-2 3x3 conv-BN-ReLU per entry, applied to each view separately.
  std::vector<std::size_t> input_phase_channels{8, 8};
  /// Residual stages; every stage after the first halves the resolution.
  std::vector<StagePlan> stages{{16, 2}, {32, 2}, {64, 2}};
  std::size_t attention_channels = 4;
  /// Shared regression head widths; the last entry must be 1.
  std::vector<std::size_t> head_widths{32, 1};
  std::size_t mlp_hidden = 64;
  LossWeights loss_weights;
  Variant variant = Variant::kProposed;

  /// Throws ConfigError on an inconsistent plan.
  void validate() const;
  /// Spatial side of the backbone feature maps.
  std::size_t feature_side() const;
};

}  // namespace shapefat::model
