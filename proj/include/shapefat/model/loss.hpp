// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "shapefat/model/network.hpp"

namespace shapefat::model {

struct LossBreakdown {
  ad::Var total;
  /// Components; null when the variant does not produce them.
  ad::Var reg;
  ad::Var att_reg;
  ad::Var att_cls;

  double total_value() const;
  double reg_value() const;
  double att_reg_value() const;
  double att_cls_value() const;
  /// alpha_1 * L_att_reg + alpha_2 * L_att_cls.
  double attention_value(const LossWeights& w) const;
};

/// L_total = lambda_1 MSE(fat_pred) + alpha_1 MSE(att_fat_pred) + alpha_2 CE(grade_logits).
/// Absent components contribute nothing. Grades outside 0..3 throw ConfigError.
LossBreakdown total_loss(ad::Tape& tape, const ModelOutputs& outputs, const ad::Tensor& fat_target,
                         std::span<const int> grade_target, const LossWeights& weights);

}  // namespace shapefat::model
