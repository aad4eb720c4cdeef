// SPDX-License-Identifier: Apache-2.0
#include "shapefat/train/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "shapefat/error.hpp"

namespace shapefat::train {
namespace {

void check_lengths(const char* what, std::size_t a, std::size_t b) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a) + " predictions vs " +
                     std::to_string(b) + " targets");
  }
  if (a == 0) throw ShapeError(std::string(what) + ": empty input");
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> target) {
  check_lengths("rmse", pred.size(), target.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) ss += (pred[i] - target[i]) * (pred[i] - target[i]);
  return std::sqrt(ss / static_cast<double>(pred.size()));
}

double r_squared(std::span<const double> pred, std::span<const double> target) {
  check_lengths("r_squared", pred.size(), target.size());
  double mean = 0.0;
  for (double t : target) mean += t;
  mean /= static_cast<double>(target.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    ss_tot += (target[i] - mean) * (target[i] - mean);
    ss_res += (pred[i] - target[i]) * (pred[i] - target[i]);
  }
  if (ss_tot == 0.0) throw NumericError("r_squared: targets have zero variance");
  return 1.0 - ss_res / ss_tot;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) {
    for (std::size_t c : row) t += c;
  }
  return t;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

double ConfusionMatrix::accuracy() const {
  const std::size_t n = total();
  if (n == 0) throw ShapeError("confusion matrix is empty");
  return 100.0 * static_cast<double>(trace()) / static_cast<double>(n);
}

ConfusionMatrix confusion_matrix(std::span<const int> pred_grades, std::span<const int> true_grades) {
  check_lengths("confusion_matrix", pred_grades.size(), true_grades.size());
  ConfusionMatrix m;
  for (std::size_t i = 0; i < pred_grades.size(); ++i) {
    const int p = pred_grades[i], t = true_grades[i];
    if (p < 0 || p > 3 || t < 0 || t > 3) {
      throw ConfigError("confusion_matrix: grade out of range 0..3 at index " + std::to_string(i));
    }
    ++m.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

MetricsReport evaluate(std::vector<std::string> ids, std::span<const double> raw_pred,
                       std::span<const double> truth, std::span<const int> true_grades,
                       const shape::FatCalib& calib, int fold) {
  check_lengths("evaluate", raw_pred.size(), truth.size());
  check_lengths("evaluate", raw_pred.size(), true_grades.size());
  if (ids.size() != raw_pred.size()) throw ShapeError("evaluate: id count mismatch");
  MetricsReport r;
  r.fold = fold;
  r.ids = std::move(ids);
  r.truth.assign(truth.begin(), truth.end());
  r.true_grades.assign(true_grades.begin(), true_grades.end());
  for (double p : raw_pred) {
    const double c = std::clamp(p, 0.0, 100.0);
    r.pred.push_back(c);
    r.pred_grades.push_back(shape::fat_to_grade(c, calib));
  }
  r.rmse = rmse(r.pred, r.truth);
  r.r2 = r_squared(r.pred, r.truth);
  r.confusion = confusion_matrix(r.pred_grades, r.true_grades);
  r.grade_accuracy = r.confusion.accuracy();
  return r;
}

MetricsReport pool(std::span<const MetricsReport> reports, const shape::FatCalib& calib) {
  std::vector<std::string> ids;
  std::vector<double> pred, truth;
  std::vector<int> grades;
  for (const auto& r : reports) {
    ids.insert(ids.end(), r.ids.begin(), r.ids.end());
    pred.insert(pred.end(), r.pred.begin(), r.pred.end());
    truth.insert(truth.end(), r.truth.begin(), r.truth.end());
    grades.insert(grades.end(), r.true_grades.begin(), r.true_grades.end());
  }
  return evaluate(std::move(ids), pred, truth, grades, calib, -1);
}

}  // namespace shapefat::train
