// SPDX-License-Identifier: Apache-2.0
#include "shapefat/reference/linreg.hpp"

#include <Eigen/Cholesky>

#include "shapefat/error.hpp"

namespace shapefat::reference {

Eigen::VectorXd linreg_fit(const Eigen::MatrixXd& scores, const Eigen::VectorXd& targets) {
  const Eigen::Index n = scores.rows(), m = scores.cols();
  if (targets.size() != n) {
    throw ShapeError("linreg_fit: " + std::to_string(n) + " rows vs " +
                     std::to_string(targets.size()) + " targets");
  }
  if (n <= m) {
    throw ConfigError("linreg_fit: need more samples (" + std::to_string(n) + ") than features (" +
                      std::to_string(m) + ")");
  }
  Eigen::MatrixXd design(n, m + 1);
  design.leftCols(m) = scores;
  design.col(m).setOnes();
  Eigen::MatrixXd normal = design.transpose() * design;
  normal.diagonal().array() += kRidgeJitter;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericError("linreg_fit: normal equations are singular");
  }
  const Eigen::VectorXd w = ldlt.solve(design.transpose() * targets);
  if (!w.allFinite()) throw NumericError("linreg_fit: rank-deficient design");
  return w;
}

Eigen::VectorXd linreg_predict(const Eigen::VectorXd& weights, const Eigen::MatrixXd& scores) {
  const Eigen::Index m = scores.cols();
  if (weights.size() != m + 1) {
    throw ShapeError("linreg_predict: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(m) + " features");
  }
  return (scores * weights.head(m)).array() + weights(m);
}

}  // namespace shapefat::reference
