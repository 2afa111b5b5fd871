#include "streamgp/linalg.hpp"

#include <array>
#include <cmath>
#include <string>

#include "streamgp/errors.hpp"

namespace streamgp {

MatrixXd Cholesky::solve(const MatrixXd& rhs) const {
  MatrixXd tmp = lower_.triangularView<Eigen::Lower>().solve(rhs);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(tmp);
}

VectorXd Cholesky::solve(const VectorXd& rhs) const {
  VectorXd tmp = lower_.triangularView<Eigen::Lower>().solve(rhs);
  return lower_.transpose().triangularView<Eigen::Upper>().solve(tmp);
}

MatrixXd Cholesky::solve_lower(const MatrixXd& rhs) const {
  return lower_.triangularView<Eigen::Lower>().solve(rhs);
}

VectorXd Cholesky::solve_lower(const VectorXd& rhs) const {
  return lower_.triangularView<Eigen::Lower>().solve(rhs);
}

double Cholesky::log_det() const {
  return 2.0 * lower_.diagonal().array().log().sum();
}

Cholesky robust_cholesky(const MatrixXd& matrix, double scale) {
  if (matrix.rows() != matrix.cols()) {
    throw InputError("cholesky: matrix is not square");
  }
  if (!matrix.allFinite()) {
    throw NumericalError("cholesky: matrix has non-finite entries");
  }
  const double s = scale > 0.0 ? scale : 1.0;
  const std::array<double, 4> jitters = {0.0, 1e-8 * s, 1e-7 * s, 1e-6 * s};
  for (double jitter : jitters) {
    MatrixXd work = matrix;
    work.diagonal().array() += jitter;
    Eigen::LLT<MatrixXd> llt(work);
    if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0) {
      Cholesky out;
      out.lower_ = llt.matrixL();
      out.jitter_ = jitter;
      if (out.lower_.allFinite()) return out;
    }
  }
  throw NumericalError("cholesky: factorization failed after jitter escalation (size " +
                       std::to_string(matrix.rows()) + ")");
}

MatrixXd add_jitter(MatrixXd matrix, double amount) {
  matrix.diagonal().array() += amount;
  return matrix;
}

MatrixXd symmetrize(const MatrixXd& matrix) { return 0.5 * (matrix + matrix.transpose()); }

MatrixXd gram_factor(const MatrixXd& t) {
  const Eigen::Index n = t.cols();
  if (t.rows() >= n) {
    Eigen::HouseholderQR<MatrixXd> qr(t);
    MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (r(i, i) < 0.0) r.row(i) *= -1.0;
    }
    return r.transpose();
  }
  // Rank-deficient Gram: fall back to a jittered Cholesky.
  MatrixXd gram = t.transpose() * t;
  return robust_cholesky(symmetrize(gram), gram.diagonal().maxCoeff()).lower();
}

double min_eigenvalue(const MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace streamgp
