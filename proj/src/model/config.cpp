// SPDX-License-Identifier: Apache-2.0
#include "shapefat/model/config.hpp"

#include <cmath>

#include "shapefat/error.hpp"
#include "shapefat/shape/label.hpp"

namespace shapefat::model {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kPlainBackbone:
      return "plain_backbone";
    case Variant::kBaseline:
      return "baseline";
    case Variant::kProposed:
      return "proposed";
    case Variant::kMlp:
      return "mlp";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "plain_backbone" || name == "plain") return Variant::kPlainBackbone;
  if (name == "baseline") return Variant::kBaseline;
  if (name == "proposed") return Variant::kProposed;
  if (name == "mlp") return Variant::kMlp;
  throw ConfigError("unknown model variant '" + std::string(name) + "'");
}

bool has_attention(Variant v) { return v == Variant::kBaseline || v == Variant::kProposed; }

bool has_classification(Variant v) { return v == Variant::kProposed; }

std::size_t ModelConfig::feature_side() const {
  std::size_t side = input_size;
  for (std::size_t i = 0; i < input_phase_channels.size(); ++i) side /= 2;
  for (std::size_t i = 1; i < stages.size(); ++i) side /= 2;
  return side;
}

void ModelConfig::validate() const {
  if (input_size == 0) throw ConfigError("model: input size must be positive");
  if (attention_channels != shape::kNumGrades) {
    throw ConfigError("model: attention channels (" + std::to_string(attention_channels) +
                      ") must equal the number of steatosis grades (" +
                      std::to_string(shape::kNumGrades) + ")");
  }
  if (head_widths.empty() || head_widths.back() != 1) {
    throw ConfigError("model: regression head must end in a single output");
  }
  for (std::size_t w : head_widths) {
    if (w == 0) throw ConfigError("model: head widths must be positive");
  }
  for (const auto& w : {loss_weights.reg, loss_weights.att_reg, loss_weights.att_cls}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("model: loss weights must be >= 0");
  }
  if (variant == Variant::kMlp) {
    if (mlp_hidden == 0) throw ConfigError("model: mlp hidden width must be positive");
    return;
  }
  if (input_phase_channels.empty()) throw ConfigError("model: need at least one input-phase conv");
  if (stages.empty()) throw ConfigError("model: need at least one residual stage");
  for (std::size_t c : input_phase_channels) {
    if (c == 0) throw ConfigError("model: input-phase channels must be positive");
  }
  for (const auto& s : stages) {
    if (s.channels == 0 || s.blocks == 0) {
      throw ConfigError("model: residual stages need positive channels and blocks");
    }
  }
  std::size_t factor = 1;
  for (std::size_t i = 0; i < input_phase_channels.size() + stages.size() - 1; ++i) factor *= 2;
  if (input_size % factor != 0) {
    throw ConfigError("model: input size " + std::to_string(input_size) +
                      " is not divisible by the total downsampling factor " +
                      std::to_string(factor));
  }
}

}  // namespace shapefat::model
