// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include <Eigen/Core>

namespace shapefat::reference {

struct PcaModel {
  Eigen::VectorXd mean;        // d
  Eigen::MatrixXd components;  // m x d, orthonormal rows
  /// Explained-variance ratio of every retained component, descending.
  std::vector<double> explained_ratio;

  std::size_t dims() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t count() const { return static_cast<std::size_t>(components.rows()); }
};

/// Keeps the smallest number of leading components whose cumulative
/// explained variance reaches `var_threshold`. X is n x d, one sample per row.
PcaModel pca_fit(const Eigen::MatrixXd& X, double var_threshold = 0.95);

/// (X - mean) * components^T, n x m.
Eigen::MatrixXd pca_project(const PcaModel& model, const Eigen::MatrixXd& X);

}  // namespace shapefat::reference
