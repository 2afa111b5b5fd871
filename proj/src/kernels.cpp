#include "streamgp/kernels.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "streamgp/errors.hpp"

namespace streamgp {

namespace {

constexpr double kSqrt5 = 2.23606797749978969640917366873127623544;

double scaled_sq_distance(const Kernel& kernel, const Eigen::Ref<const VectorXd>& x,
                          const Eigen::Ref<const VectorXd>& x2) {
  return ((x - x2).array() / kernel.lengthscales.array()).square().sum();
}

void check_dims(const Kernel& kernel, Eigen::Index d1, Eigen::Index d2) {
  if (d1 != kernel.input_dim() || d2 != kernel.input_dim()) {
    throw InputError("kernel: input dimension " + std::to_string(d1) + "/" + std::to_string(d2) +
                     " does not match kernel input_dim " + std::to_string(kernel.input_dim()));
  }
}

double matern52_profile(double r) {
  return (1.0 + kSqrt5 * r + 5.0 * r * r / 3.0) * std::exp(-kSqrt5 * r);
}

}  // namespace

const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::kArdRbf:
      return "rbf";
    case KernelKind::kMatern52:
      return "matern52";
    case KernelKind::kLinear:
      return "linear";
  }
  return "unknown";
}

Kernel Kernel::ard_rbf(double output_scale_sq, VectorXd lengthscales) {
  Kernel k{KernelKind::kArdRbf, output_scale_sq, std::move(lengthscales)};
  k.validate();
  return k;
}

Kernel Kernel::ard_rbf(double output_scale_sq, double lengthscale, int input_dim) {
  return ard_rbf(output_scale_sq, VectorXd::Constant(input_dim, lengthscale));
}

Kernel Kernel::matern52(double output_scale_sq, VectorXd lengthscales) {
  Kernel k{KernelKind::kMatern52, output_scale_sq, std::move(lengthscales)};
  k.validate();
  return k;
}

Kernel Kernel::matern52(double output_scale_sq, double lengthscale, int input_dim) {
  return matern52(output_scale_sq, VectorXd::Constant(input_dim, lengthscale));
}

Kernel Kernel::linear(double output_scale_sq, VectorXd lengthscales) {
  Kernel k{KernelKind::kLinear, output_scale_sq, std::move(lengthscales)};
  k.validate();
  return k;
}

Kernel Kernel::with_output_scale(double scale) const {
  Kernel k = *this;
  k.output_scale_sq = scale;
  k.validate();
  return k;
}

void Kernel::validate() const {
  if (!(output_scale_sq > 0.0) || !std::isfinite(output_scale_sq)) {
    throw InputError("kernel: output_scale_sq must be positive and finite");
  }
  if (lengthscales.size() < 1) throw InputError("kernel: input_dim must be >= 1");
  for (Eigen::Index j = 0; j < lengthscales.size(); ++j) {
    if (!(lengthscales[j] > 0.0) || !std::isfinite(lengthscales[j])) {
      throw InputError("kernel: lengthscales must be positive and finite");
    }
  }
}

NoiseModel::NoiseModel(double variance) {
  if (std::isnan(variance)) throw InputError("noise: variance is NaN");
  variance_ = std::max(variance, kFloor);
}

double kernel_eval(const Kernel& kernel, const Eigen::Ref<const VectorXd>& x,
                   const Eigen::Ref<const VectorXd>& x2) {
  check_dims(kernel, x.size(), x2.size());
  switch (kernel.kind) {
    case KernelKind::kArdRbf:
      return kernel.output_scale_sq * std::exp(-0.5 * scaled_sq_distance(kernel, x, x2));
    case KernelKind::kMatern52:
      return kernel.output_scale_sq * matern52_profile(std::sqrt(scaled_sq_distance(kernel, x, x2)));
    case KernelKind::kLinear:
      return kernel.output_scale_sq *
             (x.array() * x2.array() / kernel.lengthscales.array().square()).sum();
  }
  return 0.0;
}

MatrixXd kernel_matrix(const Kernel& kernel, const MatrixXd& X, const MatrixXd& X2) {
  check_dims(kernel, X.cols(), X2.cols());
  const VectorXd inv_ls = kernel.lengthscales.cwiseInverse();
  const MatrixXd a = X * inv_ls.asDiagonal();
  const MatrixXd b = X2 * inv_ls.asDiagonal();
  if (kernel.kind == KernelKind::kLinear) {
    return kernel.output_scale_sq * (a * b.transpose());
  }
  // Squared distances via the expansion |a|^2 + |b|^2 - 2 a.b, clamped at 0.
  const VectorXd an = a.rowwise().squaredNorm();
  const VectorXd bn = b.rowwise().squaredNorm();
  MatrixXd r2 = (-2.0 * (a * b.transpose())).colwise() + an;
  r2.rowwise() += bn.transpose();
  r2 = r2.cwiseMax(0.0);
  if (kernel.kind == KernelKind::kArdRbf) {
    return kernel.output_scale_sq * (-0.5 * r2.array()).exp().matrix();
  }
  const Eigen::ArrayXXd r = r2.array().sqrt();
  return kernel.output_scale_sq *
         ((1.0 + kSqrt5 * r + (5.0 / 3.0) * r2.array()) * (-kSqrt5 * r).exp()).matrix();
}

VectorXd kernel_diag(const Kernel& kernel, const MatrixXd& X) {
  check_dims(kernel, X.cols(), X.cols());
  if (kernel.stationary()) return VectorXd::Constant(X.rows(), kernel.output_scale_sq);
  VectorXd d(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) d[i] = kernel_eval(kernel, X.row(i), X.row(i));
  return d;
}

std::vector<MatrixXd> kernel_matrix_log_gradients(const Kernel& kernel, const MatrixXd& X) {
  check_dims(kernel, X.cols(), X.cols());
  const Eigen::Index n = X.rows();
  const int d = kernel.input_dim();
  std::vector<MatrixXd> grads;
  grads.reserve(static_cast<std::size_t>(d) + 1);
  const MatrixXd K = kernel_matrix(kernel, X, X);
  grads.push_back(K);  // d/d log(sigma_f^2)
  for (int j = 0; j < d; ++j) {
    MatrixXd g(n, n);
    const double ls2 = kernel.lengthscales[j] * kernel.lengthscales[j];
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        const double diff = X(a, j) - X(b, j);
        switch (kernel.kind) {
          case KernelKind::kArdRbf:
            g(a, b) = K(a, b) * diff * diff / ls2;
            break;
          case KernelKind::kMatern52: {
            const double r = std::sqrt(scaled_sq_distance(kernel, X.row(a), X.row(b)));
            g(a, b) = kernel.output_scale_sq * (5.0 / 3.0) * (1.0 + kSqrt5 * r) *
                      std::exp(-kSqrt5 * r) * diff * diff / ls2;
            break;
          }
          case KernelKind::kLinear:
            g(a, b) = -2.0 * kernel.output_scale_sq * X(a, j) * X(b, j) / ls2;
            break;
        }
      }
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

std::uint64_t kernel_fingerprint(const Kernel& kernel) {
  // FNV-1a over the kind tag and the raw lengthscale bytes.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  const int tag = static_cast<int>(kernel.kind);
  mix(&tag, sizeof(tag));
  mix(kernel.lengthscales.data(), sizeof(double) * static_cast<std::size_t>(kernel.lengthscales.size()));
  return h;
}

FrequencyDraws sample_frequencies(const Kernel& kernel, int n, std::uint64_t seed) {
  kernel.validate();
  if (!kernel.stationary()) {
    throw UnsupportedError("sample_frequencies: linear kernel has no spectral density");
  }
  if (n < 1) throw InputError("sample_frequencies: need at least one sample");
  const int d = kernel.input_dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(5.0);
  FrequencyDraws draws;
  draws.seed = seed;
  draws.kernel_fingerprint = kernel_fingerprint(kernel);
  draws.frequencies.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) draws.frequencies(i, j) = normal(rng) / kernel.lengthscales[j];
    if (kernel.kind == KernelKind::kMatern52) {
      draws.frequencies.row(i) *= std::sqrt(5.0 / chi2(rng));
    }
  }
  return draws;
}

double rff_kernel_estimate(const Kernel& kernel, const FrequencyDraws& draws,
                           const Eigen::Ref<const VectorXd>& x,
                           const Eigen::Ref<const VectorXd>& x2) {
  check_dims(kernel, x.size(), x2.size());
  if (draws.frequencies.cols() != kernel.input_dim()) {
    throw InputError("rff_kernel_estimate: frequency dimension mismatch");
  }
  const VectorXd px = draws.frequencies * x;
  const VectorXd px2 = draws.frequencies * x2;
  const double sum = (px.array().cos() * px2.array().cos() + px.array().sin() * px2.array().sin()).sum();
  return kernel.output_scale_sq * sum / draws.count();
}

}  // namespace streamgp
