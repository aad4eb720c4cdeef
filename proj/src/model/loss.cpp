// SPDX-License-Identifier: Apache-2.0
#include "shapefat/model/loss.hpp"

#include <string>

#include "shapefat/error.hpp"
#include "shapefat/shape/label.hpp"

namespace shapefat::model {
namespace {

double value_or_zero(const ad::Var& v) { return v ? v->value[0] : 0.0; }

}  // namespace

double LossBreakdown::total_value() const { return value_or_zero(total); }
double LossBreakdown::reg_value() const { return value_or_zero(reg); }
double LossBreakdown::att_reg_value() const { return value_or_zero(att_reg); }
double LossBreakdown::att_cls_value() const { return value_or_zero(att_cls); }

double LossBreakdown::attention_value(const LossWeights& w) const {
  return w.att_reg * att_reg_value() + w.att_cls * att_cls_value();
}

LossBreakdown total_loss(ad::Tape& tape, const ModelOutputs& outputs, const ad::Tensor& fat_target,
                         std::span<const int> grade_target, const LossWeights& weights) {
  for (int g : grade_target) {
    if (g < 0 || g >= static_cast<int>(shape::kNumGrades)) {
      throw ConfigError("grade target " + std::to_string(g) + " outside 0.." +
                        std::to_string(shape::kNumGrades - 1));
    }
  }
  if (!outputs.fat_pred) throw Error("total_loss: missing fat prediction");
  if (grade_target.size() != fat_target.size()) {
    throw ShapeError("total_loss: " + std::to_string(fat_target.size()) + " fat targets vs " +
                     std::to_string(grade_target.size()) + " grade targets");
  }

  LossBreakdown out;
  out.reg = ad::mse_loss(tape, outputs.fat_pred, fat_target);
  out.total = ad::scale(tape, out.reg, weights.reg);
  if (outputs.att_fat_pred) {
    out.att_reg = ad::mse_loss(tape, outputs.att_fat_pred, fat_target);
    out.total = ad::add(tape, out.total, ad::scale(tape, out.att_reg, weights.att_reg));
  }
  if (outputs.grade_logits) {
    out.att_cls = ad::softmax_cross_entropy(tape, outputs.grade_logits, grade_target);
    out.total = ad::add(tape, out.total, ad::scale(tape, out.att_cls, weights.att_cls));
  }
  return out;
}

}  // namespace shapefat::model
