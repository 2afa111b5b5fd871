#pragma once

#include <Eigen/Dense>

namespace streamgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Relative jitter added to inducing-variable covariances before factorization.
inline constexpr double kRelativeJitter = 1e-8;

/// Cholesky factor of a symmetric PSD matrix together with the jitter that was
/// needed to obtain it.
class Cholesky {
 public:
  Cholesky() = default;

  const MatrixXd& lower() const { return lower_; }
  double jitter() const { return jitter_; }
  Eigen::Index size() const { return lower_.rows(); }

  MatrixXd solve(const MatrixXd& rhs) const;
  VectorXd solve(const VectorXd& rhs) const;
  /// L^{-1} rhs
  MatrixXd solve_lower(const MatrixXd& rhs) const;
  VectorXd solve_lower(const VectorXd& rhs) const;
  double log_det() const;

 private:
  friend Cholesky robust_cholesky(const MatrixXd& matrix, double scale);
  MatrixXd lower_;
  double jitter_ = 0.0;
};

/// Factorizes `matrix` as given; on failure retries with jitter
/// 1e-8*scale, 1e-7*scale, 1e-6*scale added to the diagonal. Throws
/// NumericalError when all attempts fail.
Cholesky robust_cholesky(const MatrixXd& matrix, double scale);

MatrixXd add_jitter(MatrixXd matrix, double amount);

MatrixXd symmetrize(const MatrixXd& matrix);

/// Lower-triangular factor L with L L^T = T^T T, computed by QR of T so the
/// conditioning is not squared.
MatrixXd gram_factor(const MatrixXd& t);

double min_eigenvalue(const MatrixXd& symmetric);

}  // namespace streamgp
