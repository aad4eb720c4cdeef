// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shapefat/shape/label.hpp"

namespace shapefat::train {

/// sqrt(mean((pred - target)^2)).
double rmse(std::span<const double> pred, std::span<const double> target);
/// 1 - SS_res / SS_tot; throws NumericError when the targets have no variance.
double r_squared(std::span<const double> pred, std::span<const double> target);

struct ConfusionMatrix {
  /// counts[true][pred]
  std::array<std::array<std::size_t, 4>, 4> counts{};

  std::size_t total() const;
  std::size_t trace() const;
  /// Percent of correctly graded samples.
  double accuracy() const;
};

ConfusionMatrix confusion_matrix(std::span<const int> pred_grades, std::span<const int> true_grades);

struct MetricsReport {
  double rmse = 0.0;
  double r2 = 0.0;
  double grade_accuracy = 0.0;  // percent
  ConfusionMatrix confusion;
  std::vector<std::string> ids;
  std::vector<double> pred;  // clamped to [0, 100]
  std::vector<double> truth;
  std::vector<int> pred_grades;
  std::vector<int> true_grades;
  int fold = -1;  // -1 for pooled reports
};

/// Clamps raw predictions to [0, 100], grades them with `calib` and computes
/// all metrics.
MetricsReport evaluate(std::vector<std::string> ids, std::span<const double> raw_pred,
                       std::span<const double> truth, std::span<const int> true_grades,
                       const shape::FatCalib& calib, int fold = -1);

/// Metrics over the concatenation of several reports.
MetricsReport pool(std::span<const MetricsReport> reports, const shape::FatCalib& calib);

}  // namespace shapefat::train
