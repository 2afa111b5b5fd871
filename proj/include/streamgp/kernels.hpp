#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace streamgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class KernelKind {
  kArdRbf,
  kMatern52,
  // Dot-product kernel; only used to cross-check against weight-space regression.
  kLinear,
};

const char* to_string(KernelKind kind);

/// Stationary covariance function k(x, x') with output scale sigma_f^2 and
/// one lengthscale per input dimension.
///
///   ARD-RBF:     sigma_f^2 exp(-r^2 / 2)
///   Matern-5/2:  sigma_f^2 (1 + sqrt(5) r + 5 r^2 / 3) exp(-sqrt(5) r)
///   Linear:      sigma_f^2 sum_j x_j x'_j / l_j^2
///
/// with r^2 = sum_j (x_j - x'_j)^2 / l_j^2.
struct Kernel {
  KernelKind kind = KernelKind::kArdRbf;
  double output_scale_sq = 1.0;
  VectorXd lengthscales = VectorXd::Ones(1);

  static Kernel ard_rbf(double output_scale_sq, VectorXd lengthscales);
  static Kernel ard_rbf(double output_scale_sq, double lengthscale, int input_dim = 1);
  static Kernel matern52(double output_scale_sq, VectorXd lengthscales);
  static Kernel matern52(double output_scale_sq, double lengthscale, int input_dim = 1);
  static Kernel linear(double output_scale_sq, VectorXd lengthscales);

  int input_dim() const { return static_cast<int>(lengthscales.size()); }
  bool stationary() const { return kind != KernelKind::kLinear; }
  /// Same kernel with output_scale_sq replaced.
  Kernel with_output_scale(double output_scale_sq) const;
  /// Throws InputError unless output_scale_sq > 0 and every lengthscale > 0.
  void validate() const;
};

/// Gaussian observation noise; variance floored at 1e-10.
class NoiseModel {
 public:
  static constexpr double kFloor = 1e-10;
  explicit NoiseModel(double variance = 1.0);
  double variance() const { return variance_; }

 private:
  double variance_;
};

double kernel_eval(const Kernel& kernel, const Eigen::Ref<const VectorXd>& x,
                   const Eigen::Ref<const VectorXd>& x2);

/// Rows of X and X2 are points.
MatrixXd kernel_matrix(const Kernel& kernel, const MatrixXd& X, const MatrixXd& X2);
VectorXd kernel_diag(const Kernel& kernel, const MatrixXd& X);

/// Partial derivatives of kernel_matrix(X, X) with respect to
/// log(output_scale_sq) followed by log(lengthscale_j) for each j.
std::vector<MatrixXd> kernel_matrix_log_gradients(const Kernel& kernel, const MatrixXd& X);

/// Monte-Carlo draws from the kernel's normalized spectral density.
struct FrequencyDraws {
  MatrixXd frequencies;  // count x input_dim
  std::uint64_t seed = 0;
  std::uint64_t kernel_fingerprint = 0;

  int count() const { return static_cast<int>(frequencies.rows()); }
};

/// Hash of the spectral shape (kind + lengthscales); the output scale is
/// applied at assembly time and is not part of it.
std::uint64_t kernel_fingerprint(const Kernel& kernel);

/// ARD-RBF: w_j ~ N(0, 1/l_j^2). Matern-5/2: multivariate Student-t with 5
/// degrees of freedom, w = g * sqrt(5 / u), g ~ N(0, diag(1/l^2)), u ~ chi2(5).
FrequencyDraws sample_frequencies(const Kernel& kernel, int n, std::uint64_t seed);

/// sigma_f^2 / N sum_n [cos(w_n.x) cos(w_n.x') + sin(w_n.x) sin(w_n.x')]
double rff_kernel_estimate(const Kernel& kernel, const FrequencyDraws& draws,
                           const Eigen::Ref<const VectorXd>& x,
                           const Eigen::Ref<const VectorXd>& x2);

}  // namespace streamgp
