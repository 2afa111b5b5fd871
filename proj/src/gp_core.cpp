#include "streamgp/gp_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "streamgp/errors.hpp"

namespace streamgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double diag_scale(const MatrixXd& m) {
  if (m.rows() == 0) return 1.0;
  const double s = m.diagonal().cwiseAbs().maxCoeff();
  return s > 0.0 ? s : 1.0;
}

Cholesky factor_kuu(const MatrixXd& kuu) { return robust_cholesky(symmetrize(kuu), diag_scale(kuu)); }

void check_sparse_shapes(const MatrixXd& kuu, const MatrixXd& kuf, Eigen::Index n) {
  if (kuu.rows() != kuu.cols()) throw InputError("Kuu must be square");
  if (kuf.rows() != kuu.rows()) throw InputError("Kuf rows must match Kuu");
  if (kuf.cols() != n) throw InputError("Kuf columns must match the number of targets");
}

double log_det_chol(const MatrixXd& l) { return 2.0 * l.diagonal().cwiseAbs().array().log().sum(); }

}  // namespace

GaussianDist GaussianDist::from_covariance(VectorXd mean, const MatrixXd& cov) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw InputError("GaussianDist: covariance shape does not match mean");
  }
  return {std::move(mean), robust_cholesky(symmetrize(cov), diag_scale(cov)).lower()};
}

void DataBatch::validate() const {
  if (X.rows() != y.size()) throw InputError("DataBatch: X and y lengths differ");
  if (timestamps.size() != 0 && timestamps.size() != y.size()) {
    throw InputError("DataBatch: timestamps length differs from y");
  }
  if (!X.allFinite() || !y.allFinite() || !timestamps.allFinite()) {
    throw InputError("DataBatch: non-finite values");
  }
}

DataBatch DataBatch::subset(const std::vector<Eigen::Index>& rows) const {
  DataBatch out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  if (timestamps.size() != 0) out.timestamps.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    const auto o = static_cast<Eigen::Index>(i);
    out.X.row(o) = X.row(r);
    out.y[o] = y[r];
    if (timestamps.size() != 0) out.timestamps[o] = timestamps[r];
  }
  return out;
}

DataBatch concat(const std::vector<DataBatch>& batches) {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  bool stamps = !batches.empty();
  for (const auto& b : batches) {
    n += b.size();
    if (b.size() > 0) d = b.X.cols();
    stamps = stamps && (b.timestamps.size() == b.size());
  }
  DataBatch out;
  out.X.resize(n, d);
  out.y.resize(n);
  if (stamps) out.timestamps.resize(n);
  Eigen::Index at = 0;
  for (const auto& b : batches) {
    if (b.size() == 0) continue;
    if (b.X.cols() != d) throw InputError("concat: input dimensions differ");
    out.X.middleRows(at, b.size()) = b.X;
    out.y.segment(at, b.size()) = b.y;
    if (stamps) out.timestamps.segment(at, b.size()) = b.timestamps;
    at += b.size();
  }
  return out;
}

Predictive gp_predict(const Kernel& kernel, const NoiseModel& noise, const DataBatch& train,
                      const MatrixXd& X_star, bool include_noise, bool full_cov) {
  train.validate();
  Predictive out;
  out.includes_noise = include_noise;
  const double extra = include_noise ? noise.variance() : 0.0;
  if (train.size() == 0) {
    out.mean = VectorXd::Zero(X_star.rows());
    out.variance = kernel_diag(kernel, X_star).array() + extra;
    if (full_cov) out.covariance = add_jitter(kernel_matrix(kernel, X_star, X_star), extra);
    return out;
  }
  MatrixXd k = kernel_matrix(kernel, train.X, train.X);
  k.diagonal().array() += noise.variance();
  const Cholesky chol = robust_cholesky(k, kernel.output_scale_sq);
  const MatrixXd ks = kernel_matrix(kernel, train.X, X_star);
  out.mean = ks.transpose() * chol.solve(train.y);
  const MatrixXd v = chol.solve_lower(ks);
  out.variance = (kernel_diag(kernel, X_star) - v.colwise().squaredNorm().transpose()).cwiseMax(0.0);
  out.variance.array() += extra;
  if (full_cov) {
    MatrixXd c = kernel_matrix(kernel, X_star, X_star) - v.transpose() * v;
    c.diagonal().array() += extra;
    out.covariance = symmetrize(c);
  }
  return out;
}

LmlTerms lml_terms(const Kernel& kernel, const NoiseModel& noise, const DataBatch& train) {
  train.validate();
  if (train.size() < 1) throw InputError("log_marginal_likelihood: need at least one point");
  MatrixXd k = kernel_matrix(kernel, train.X, train.X);
  k.diagonal().array() += noise.variance();
  const Cholesky chol = robust_cholesky(k, kernel.output_scale_sq);
  const VectorXd a = chol.solve_lower(train.y);
  LmlTerms t;
  t.data_fit = -0.5 * a.squaredNorm();
  t.complexity = -0.5 * chol.log_det();
  t.constant = -0.5 * static_cast<double>(train.size()) * kLog2Pi;
  return t;
}

double log_marginal_likelihood(const Kernel& kernel, const NoiseModel& noise, const DataBatch& train) {
  return lml_terms(kernel, noise, train).total();
}

VectorXd lml_log_gradient(const Kernel& kernel, const NoiseModel& noise, const DataBatch& train) {
  train.validate();
  const Eigen::Index n = train.size();
  MatrixXd k = kernel_matrix(kernel, train.X, train.X);
  k.diagonal().array() += noise.variance();
  const Cholesky chol = robust_cholesky(k, kernel.output_scale_sq);
  const VectorXd alpha = chol.solve(train.y);
  // W = alpha alpha^T - K^{-1}; dLML = tr(W dK) / 2.
  MatrixXd w = alpha * alpha.transpose() - chol.solve(MatrixXd(MatrixXd::Identity(n, n)));
  const std::vector<MatrixXd> grads = kernel_matrix_log_gradients(kernel, train.X);
  VectorXd g(static_cast<Eigen::Index>(grads.size()) + 1);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    g[static_cast<Eigen::Index>(i)] = 0.5 * (w.array() * grads[i].array()).sum();
  }
  g[g.size() - 1] = 0.5 * noise.variance() * w.trace();
  return g;
}

GaussianDist information_posterior(const MatrixXd& Kuu, const MatrixXd& J, const VectorXd& b) {
  const Eigen::Index m = Kuu.rows();
  if (Kuu.cols() != m || J.rows() != m || J.cols() != m || b.size() != m) {
    throw InputError("information_posterior: shape mismatch");
  }
  const Cholesky lk = factor_kuu(Kuu);
  const MatrixXd& l = lk.lower();
  const MatrixXd lj = lk.solve_lower(MatrixXd(lk.solve_lower(J).transpose()));
  MatrixXd bm = symmetrize(lj);
  bm.diagonal().array() += 1.0;
  const Cholesky lb = robust_cholesky(bm, 1.0);
  GaussianDist q;
  q.mean = l * lb.solve(lk.solve_lower(b));
  // cov = F F^T with F = L L_B^{-T}; factor it from F without forming cov.
  const MatrixXd f_t = lb.solve_lower(MatrixXd(l.transpose()));
  q.cov_chol = gram_factor(f_t);
  if (!q.mean.allFinite() || !q.cov_chol.allFinite()) throw NumericalError("information_posterior: non-finite result");
  return q;
}

Predictive information_predict(const MatrixXd& Kuu, const MatrixXd& J, const VectorXd& b,
                               const MatrixXd& K_star_u, const VectorXd& k_star_diag,
                               std::optional<NoiseModel> noise) {
  const Eigen::Index m = Kuu.rows();
  if (J.rows() != m || b.size() != m || K_star_u.cols() != m || k_star_diag.size() != K_star_u.rows()) {
    throw InputError("information_predict: shape mismatch");
  }
  const Cholesky lk = factor_kuu(Kuu);
  MatrixXd bm = symmetrize(lk.solve_lower(MatrixXd(lk.solve_lower(J).transpose())));
  bm.diagonal().array() += 1.0;
  const Cholesky lb = robust_cholesky(bm, 1.0);
  // (K + J)^{-1} = L^{-T} B^{-1} L^{-1}
  const MatrixXd a = lk.solve_lower(MatrixXd(K_star_u.transpose()));
  const MatrixXd c = lb.solve_lower(a);
  Predictive out;
  out.mean = a.transpose() * lb.solve(lk.solve_lower(b));
  out.variance = (k_star_diag - a.colwise().squaredNorm().transpose() + c.colwise().squaredNorm().transpose())
                     .cwiseMax(0.0);
  if (noise) {
    out.variance.array() += noise->variance();
    out.includes_noise = true;
  }
  return out;
}

GaussianDist sgpr_optimal_q(const MatrixXd& Kuu, const MatrixXd& Kuf, const VectorXd& y,
                            const NoiseModel& noise) {
  check_sparse_shapes(Kuu, Kuf, y.size());
  const double s2 = noise.variance();
  return information_posterior(Kuu, Kuf * Kuf.transpose() / s2, Kuf * y / s2);
}

double collapsed_bound(const MatrixXd& Kuu, const MatrixXd& Kuf, const VectorXd& kff_diag,
                       const VectorXd& y, const NoiseModel& noise) {
  check_sparse_shapes(Kuu, Kuf, y.size());
  if (kff_diag.size() != y.size()) throw InputError("collapsed_bound: kff_diag length mismatch");
  const auto n = static_cast<double>(y.size());
  const double s2 = noise.variance();
  const double sd = std::sqrt(s2);
  const Cholesky lk = factor_kuu(Kuu);
  const MatrixXd a = lk.solve_lower(Kuf) / sd;
  MatrixXd bm = a * a.transpose();
  bm.diagonal().array() += 1.0;
  const Cholesky lb = robust_cholesky(symmetrize(bm), 1.0);
  const VectorXd c = lb.solve_lower(VectorXd(a * y)) / sd;
  const double log_n = -0.5 * n * kLog2Pi - 0.5 * lb.log_det() - 0.5 * n * std::log(s2) -
                       0.5 * y.squaredNorm() / s2 + 0.5 * c.squaredNorm();
  const double residual = kff_diag.sum() - s2 * a.squaredNorm();
  if (residual < -1e-8 * std::max(1.0, kff_diag.cwiseAbs().sum())) {
    throw NumericalError("collapsed_bound: negative Nystrom residual trace");
  }
  return log_n - 0.5 * std::max(residual, 0.0) / s2;
}

Predictive svgp_predict(const GaussianDist& q, const MatrixXd& Kuu, const MatrixXd& K_star_u,
                        const VectorXd& k_star_diag, std::optional<NoiseModel> noise) {
  if (K_star_u.cols() != Kuu.rows() || q.dim() != Kuu.rows() || k_star_diag.size() != K_star_u.rows()) {
    throw InputError("svgp_predict: shape mismatch");
  }
  const Cholesky lk = factor_kuu(Kuu);
  const MatrixXd a = lk.solve_lower(MatrixXd(K_star_u.transpose()));
  const MatrixXd c = lk.lower().transpose().triangularView<Eigen::Upper>().solve(a);
  Predictive out;
  out.mean = c.transpose() * q.mean;
  const MatrixXd d = q.cov_chol.transpose() * c;
  out.variance = (k_star_diag - a.colwise().squaredNorm().transpose() + d.colwise().squaredNorm().transpose())
                     .cwiseMax(0.0);
  if (noise) {
    out.variance.array() += noise->variance();
    out.includes_noise = true;
  }
  return out;
}

double gaussian_kl(const GaussianDist& q, const GaussianDist& p) {
  if (q.dim() != p.dim() || q.cov_chol.rows() != q.dim() || p.cov_chol.rows() != p.dim()) {
    throw InputError("gaussian_kl: dimension mismatch");
  }
  const auto lp = p.cov_chol.triangularView<Eigen::Lower>();
  const double trace = lp.solve(q.cov_chol).squaredNorm();
  const double maha = lp.solve(VectorXd(p.mean - q.mean)).squaredNorm();
  const double kl = 0.5 * (trace + maha - q.dim() + log_det_chol(p.cov_chol) - log_det_chol(q.cov_chol));
  return std::max(kl, 0.0);
}

double expected_log_likelihood(const GaussianDist& q, const MatrixXd& Kuu, const MatrixXd& Kuf,
                               const VectorXd& kff_diag, const VectorXd& y, const NoiseModel& noise) {
  check_sparse_shapes(Kuu, Kuf, y.size());
  if (q.dim() != Kuu.rows()) throw InputError("expected_log_likelihood: q dimension mismatch");
  const auto n = static_cast<double>(y.size());
  const double s2 = noise.variance();
  const Cholesky lk = factor_kuu(Kuu);
  const MatrixXd a = lk.solve_lower(Kuf);
  const MatrixXd c = lk.lower().transpose().triangularView<Eigen::Upper>().solve(a);
  const VectorXd mean_f = c.transpose() * q.mean;
  const double var_u = (q.cov_chol.transpose() * c).squaredNorm();
  const double resid = kff_diag.sum() - a.squaredNorm();
  return -0.5 * n * (kLog2Pi + std::log(s2)) - 0.5 * ((y - mean_f).squaredNorm() + var_u + resid) / s2;
}

double elbo_gaussian(const GaussianDist& q, const MatrixXd& Kuu, const MatrixXd& Kuf,
                     const VectorXd& kff_diag, const VectorXd& y, const NoiseModel& noise) {
  const GaussianDist prior{VectorXd::Zero(Kuu.rows()), factor_kuu(Kuu).lower()};
  return expected_log_likelihood(q, Kuu, Kuf, kff_diag, y, noise) - gaussian_kl(q, prior);
}

namespace {

struct Packed {
  Kernel kernel;
  double floor;
  bool fit_noise;
  double fixed_noise;

  int size() const { return kernel.input_dim() + 1 + (fit_noise ? 1 : 0); }

  VectorXd pack(const Kernel& k, const NoiseModel& nm) const {
    VectorXd th(size());
    th[0] = std::log(k.output_scale_sq);
    th.segment(1, k.input_dim()) = k.lengthscales.array().log();
    if (fit_noise) th[th.size() - 1] = std::log(std::max(nm.variance() - floor, floor * 1e-3));
    return th;
  }

  std::pair<Kernel, NoiseModel> unpack(const VectorXd& th) const {
    Kernel k = kernel;
    k.output_scale_sq = std::exp(th[0]);
    k.lengthscales = th.segment(1, kernel.input_dim()).array().exp();
    const double nv = fit_noise ? floor + std::exp(th[th.size() - 1]) : fixed_noise;
    return {k, NoiseModel(nv)};
  }
};

struct Eval {
  double value = -std::numeric_limits<double>::infinity();
  VectorXd grad;
  bool ok = false;
};

Eval evaluate(const Packed& pk, const VectorXd& th, const DataBatch& train) {
  Eval e;
  try {
    const auto [k, nm] = pk.unpack(th);
    if (!k.lengthscales.allFinite() || !std::isfinite(k.output_scale_sq) || k.output_scale_sq <= 0.0) return e;
    e.value = log_marginal_likelihood(k, nm, train);
    const VectorXd g = lml_log_gradient(k, nm, train);
    e.grad.resize(pk.size());
    e.grad.head(1 + k.input_dim()) = g.head(1 + k.input_dim());
    if (pk.fit_noise) {
      // sigma^2 = floor + exp(theta): d/dtheta = (d/dlog sigma^2) exp(theta) / sigma^2.
      e.grad[pk.size() - 1] = g[g.size() - 1] * std::exp(th[th.size() - 1]) / nm.variance();
    }
    e.ok = std::isfinite(e.value) && e.grad.allFinite();
  } catch (const NumericalError&) {
    e.ok = false;
  }
  return e;
}

}  // namespace

FitResult fit_hyperparameters(const Kernel& kernel_init, const NoiseModel& noise_init,
                              const DataBatch& train, const FitOptions& opts) {
  train.validate();
  kernel_init.validate();
  if (train.size() < 1) throw InputError("fit_hyperparameters: need at least one point");
  const double mean_y = train.y.mean();
  const double var_y = (train.y.array() - mean_y).square().mean();
  Packed pk{kernel_init, std::max(opts.noise_floor_rel * var_y, NoiseModel::kFloor), opts.fit_noise,
            noise_init.variance()};
  VectorXd th = pk.pack(kernel_init, NoiseModel(std::max(noise_init.variance(), pk.floor)));

  FitResult res{kernel_init, noise_init, {}, 0, false};
  Eval cur = evaluate(pk, th, train);
  if (!cur.ok) {
    res.aborted = true;
    return res;
  }
  {
    const auto [k, nm] = pk.unpack(th);
    res.kernel = k;
    res.noise = nm;
  }
  res.trace.push_back(cur.value);
  const int p = pk.size();
  MatrixXd h = MatrixXd::Identity(p, p);
  constexpr double kMaxStep = 2.0;  // per-coordinate cap in log space
  for (int it = 0; it < opts.max_iters; ++it) {
    if (cur.grad.cwiseAbs().maxCoeff() < opts.grad_tol) break;
    VectorXd dir = h * cur.grad;
    if (dir.dot(cur.grad) <= 0.0) {
      h.setIdentity();
      dir = cur.grad;
    }
    const double big = dir.cwiseAbs().maxCoeff();
    if (big > kMaxStep) dir *= kMaxStep / big;
    const double slope = dir.dot(cur.grad);
    double alpha = 1.0;
    bool accepted = false;
    Eval next;
    VectorXd th_next;
    bool non_finite = false;
    for (int ls = 0; ls < 40; ++ls) {
      th_next = th + alpha * dir;
      next = evaluate(pk, th_next, train);
      non_finite = non_finite || !next.ok;
      if (next.ok && next.value >= cur.value + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      res.aborted = non_finite;
      break;
    }
    const VectorXd s = th_next - th;
    const VectorXd yv = cur.grad - next.grad;  // gradient change of the minimized -LML
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const MatrixXd eye = MatrixXd::Identity(p, p);
      h = (eye - rho * s * yv.transpose()) * h * (eye - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    th = th_next;
    cur = next;
    const auto [k, nm] = pk.unpack(th);
    res.kernel = k;
    res.noise = nm;
    res.trace.push_back(cur.value);
    res.iterations = it + 1;
    if (s.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  return res;
}

}  // namespace streamgp
