// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace shapefat::reference {

inline constexpr double kRidgeJitter = 1e-8;

/// Least squares with intercept via the normal equations plus a small ridge
/// term on the diagonal. Returns m + 1 weights; the intercept is last.
Eigen::VectorXd linreg_fit(const Eigen::MatrixXd& scores, const Eigen::VectorXd& targets);

Eigen::VectorXd linreg_predict(const Eigen::VectorXd& weights, const Eigen::MatrixXd& scores);

}  // namespace shapefat::reference
