#pragma once

#include <Eigen/Core>

#include <cstddef>

namespace pas {

inline constexpr double kStatsRidge = 1e-6;

struct GaussianStats {
  Eigen::VectorXd mean;
  /// Unbiased sample covariance plus kStatsRidge·I.
  Eigen::MatrixXd covariance;
  size_t count = 0;
};

/// Rows are samples. Needs at least two rows.
GaussianStats fitStats(const Eigen::MatrixXd& samples);

/// Fréchet distance ‖μa − μb‖² + Tr(Σa + Σb − 2(Σa Σb)^½).
/// The trace of the square root is taken from the eigenvalues of √Σa Σb √Σa; eigenvalues
/// below −1e-8 raise NumericError, smaller negatives are clamped to zero.
double fpd(const GaussianStats& a, const GaussianStats& b);

/// Symmetric PSD square root by eigendecomposition, with the same negative-eigenvalue policy.
Eigen::MatrixXd psdSqrt(const Eigen::MatrixXd& m);

} // namespace pas
