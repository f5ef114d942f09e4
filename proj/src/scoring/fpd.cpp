#include "pas/scoring/fpd.hpp"

#include "pas/core/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace pas {

namespace {

constexpr double kNegativeTolerance = 1e-8;

Eigen::VectorXd clampedEigenvalues(const Eigen::VectorXd& values) {
  Eigen::VectorXd out = values;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) {
      throw NumericError("non-finite eigenvalue in covariance product");
    }
    if (out[i] < -kNegativeTolerance) {
      throw NumericError("matrix is not positive semidefinite (eigenvalue " + std::to_string(out[i]) + ")");
    }
    out[i] = std::max(out[i], 0.0);
  }
  return out;
}

} // namespace

GaussianStats fitStats(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 2) {
    throwInput("fit_stats needs at least two samples");
  }
  if (!samples.allFinite()) {
    throwInput("fit_stats samples must be finite");
  }
  GaussianStats s;
  s.count = static_cast<size_t>(samples.rows());
  s.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - s.mean.transpose();
  s.covariance = (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
  s.covariance.diagonal().array() += kStatsRidge;
  return s;
}

Eigen::MatrixXd psdSqrt(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw NumericError("eigendecomposition failed");
  }
  const Eigen::VectorXd root = clampedEigenvalues(eig.eigenvalues()).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double fpd(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size() || a.covariance.rows() != a.mean.size() ||
      b.covariance.rows() != b.mean.size() || a.covariance.cols() != a.covariance.rows() ||
      b.covariance.cols() != b.covariance.rows()) {
    throwInput("fpd: statistics have mismatched dimensions");
  }
  const Eigen::MatrixXd rootA = psdSqrt(a.covariance);
  const Eigen::MatrixXd inner = rootA * b.covariance * rootA;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericError("eigendecomposition failed");
  }
  const double traceRoot = clampedEigenvalues(eig.eigenvalues()).cwiseSqrt().sum();
  const double value =
      (a.mean - b.mean).squaredNorm() + a.covariance.trace() + b.covariance.trace() - 2.0 * traceRoot;
  return std::max(value, 0.0);
}

} // namespace pas
