#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "streamgp/kernels.hpp"
#include "streamgp/linalg.hpp"

namespace streamgp {

/// N(mean, L L^T) with L lower triangular.
struct GaussianDist {
  VectorXd mean;
  MatrixXd cov_chol;

  int dim() const { return static_cast<int>(mean.size()); }
  MatrixXd covariance() const { return cov_chol * cov_chol.transpose(); }

  /// Factorizes `cov` (jitter escalation relative to its largest diagonal entry).
  static GaussianDist from_covariance(VectorXd mean, const MatrixXd& cov);
};

struct Predictive {
  VectorXd mean;
  VectorXd variance;
  std::optional<MatrixXd> covariance;
  bool includes_noise = false;
};

struct DataBatch {
  MatrixXd X;            // n x d
  VectorXd y;            // n
  VectorXd timestamps;   // empty unless the batch carries pseudo-times

  Eigen::Index size() const { return y.size(); }
  int input_dim() const { return static_cast<int>(X.cols()); }
  /// Throws InputError on length mismatch or non-finite entries.
  void validate() const;
  DataBatch subset(const std::vector<Eigen::Index>& rows) const;
};

DataBatch concat(const std::vector<DataBatch>& batches);

/// Exact GP posterior. When include_noise is set the noise variance is added
/// to the returned variances.
Predictive gp_predict(const Kernel& kernel, const NoiseModel& noise, const DataBatch& train,
                      const MatrixXd& X_star, bool include_noise = false, bool full_cov = false);

/// log N(y; 0, K + sigma^2 I) = data_fit + complexity + constant.
struct LmlTerms {
  double data_fit = 0.0;    // -y^T (K + sigma^2 I)^{-1} y / 2
  double complexity = 0.0;  // -log|K + sigma^2 I| / 2
  double constant = 0.0;    // -n log(2 pi) / 2

  double total() const { return data_fit + complexity + constant; }
};

LmlTerms lml_terms(const Kernel& kernel, const NoiseModel& noise, const DataBatch& train);
double log_marginal_likelihood(const Kernel& kernel, const NoiseModel& noise, const DataBatch& train);

/// Gradient of the LML with respect to (log sigma_f^2, log l_1 .. log l_d, log sigma^2).
VectorXd lml_log_gradient(const Kernel& kernel, const NoiseModel& noise, const DataBatch& train);

/// q(u) proportional to p(u) exp(-u^T Kuu^{-1} J Kuu^{-1} u / 2 + u^T Kuu^{-1} b):
/// mean = Kuu (Kuu + J)^{-1} b, cov = Kuu (Kuu + J)^{-1} Kuu.
GaussianDist information_posterior(const MatrixXd& Kuu, const MatrixXd& J, const VectorXd& b);

/// svgp_predict for q in information form, without forming q's covariance.
Predictive information_predict(const MatrixXd& Kuu, const MatrixXd& J, const VectorXd& b,
                               const MatrixXd& K_star_u, const VectorXd& k_star_diag,
                               std::optional<NoiseModel> noise = std::nullopt);

/// Optimal q(u) of the uncollapsed SGPR bound.
GaussianDist sgpr_optimal_q(const MatrixXd& Kuu, const MatrixXd& Kuf, const VectorXd& y,
                            const NoiseModel& noise);

/// Titsias bound: log N(y; 0, sigma^2 I + Qff) - tr(Kff - Qff) / (2 sigma^2).
double collapsed_bound(const MatrixXd& Kuu, const MatrixXd& Kuf, const VectorXd& kff_diag,
                       const VectorXd& y, const NoiseModel& noise);

/// Predictive q(f*) = int p(f* | u) q(u) du. Variances floored at 0.
Predictive svgp_predict(const GaussianDist& q, const MatrixXd& Kuu, const MatrixXd& K_star_u,
                        const VectorXd& k_star_diag, std::optional<NoiseModel> noise = std::nullopt);

double gaussian_kl(const GaussianDist& q, const GaussianDist& p);

/// sum_i E_q[log N(y_i; f_i, sigma^2)] with f | u from the prior conditional.
double expected_log_likelihood(const GaussianDist& q, const MatrixXd& Kuu, const MatrixXd& Kuf,
                               const VectorXd& kff_diag, const VectorXd& y, const NoiseModel& noise);

double elbo_gaussian(const GaussianDist& q, const MatrixXd& Kuu, const MatrixXd& Kuf,
                     const VectorXd& kff_diag, const VectorXd& y, const NoiseModel& noise);

struct FitOptions {
  int max_iters = 100;
  double grad_tol = 1e-6;
  // Noise variance is kept above noise_floor_rel * var(y) (and 1e-10).
  double noise_floor_rel = 1e-6;
  bool fit_noise = true;
};

struct FitResult {
  Kernel kernel;
  NoiseModel noise;
  std::vector<double> trace;  // LML after each accepted step, starting at the initial value
  int iterations = 0;
  bool aborted = false;       // objective turned non-finite; parameters are the last good ones
};

/// Type-II maximum likelihood by BFGS on log parameters with a backtracking
/// line search that only accepts increases.
FitResult fit_hyperparameters(const Kernel& kernel_init, const NoiseModel& noise_init,
                              const DataBatch& train, const FitOptions& opts = {});

}  // namespace streamgp
