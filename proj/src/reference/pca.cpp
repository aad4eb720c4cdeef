// SPDX-License-Identifier: Apache-2.0
#include "shapefat/reference/pca.hpp"

#include <Eigen/Eigenvalues>

#include "shapefat/error.hpp"

namespace shapefat::reference {

PcaModel pca_fit(const Eigen::MatrixXd& X, double var_threshold) {
  const Eigen::Index n = X.rows(), d = X.cols();
  if (n < 2) throw ConfigError("pca: need at least 2 samples");
  if (d < 1) throw ConfigError("pca: need at least 1 feature");
  if (!(var_threshold > 0.0 && var_threshold <= 1.0)) {
    throw ConfigError("pca: variance threshold must lie in (0, 1]");
  }
  PcaModel model;
  model.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd Xc = X.rowwise() - model.mean.transpose();

  // Eigen-decompose whichever of the covariance (d x d) and the Gram matrix
  // (n x n) is smaller; both share the non-zero spectrum.
  const bool dual = n < d;
  const Eigen::MatrixXd S = dual ? Eigen::MatrixXd(Xc * Xc.transpose())
                                 : Eigen::MatrixXd(Xc.transpose() * Xc);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) throw NumericError("pca: eigendecomposition failed");
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double total = Xc.squaredNorm();
  if (!(total > 0.0)) throw NumericError("pca: data has zero variance");

  const Eigen::Index k = values.size();
  const double floor = 1e-12 * values(k - 1);
  std::vector<Eigen::VectorXd> comps;
  double cumulative = 0.0;
  for (Eigen::Index i = k - 1; i >= 0; --i) {
    const double lambda = values(i);
    if (lambda <= floor) break;
    Eigen::VectorXd v = dual ? Eigen::VectorXd(Xc.transpose() * eig.eigenvectors().col(i) /
                                               std::sqrt(lambda))
                             : Eigen::VectorXd(eig.eigenvectors().col(i));
    v.normalize();
    comps.push_back(std::move(v));
    const double ratio = lambda / total;
    model.explained_ratio.push_back(ratio);
    cumulative += ratio;
    if (cumulative >= var_threshold) break;
  }
  model.components.resize(static_cast<Eigen::Index>(comps.size()), d);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    model.components.row(static_cast<Eigen::Index>(i)) = comps[i].transpose();
  }
  return model;
}

Eigen::MatrixXd pca_project(const PcaModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.mean.size()) {
    throw ShapeError("pca_project: data has " + std::to_string(X.cols()) +
                     " features, model expects " + std::to_string(model.mean.size()));
  }
  return (X.rowwise() - model.mean.transpose()) * model.components.transpose();
}

}  // namespace shapefat::reference
