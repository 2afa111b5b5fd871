#include "streamgp/online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "streamgp/linalg.hpp"
#include "streamgp/multidim.hpp"

namespace streamgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_det_lower(const MatrixXd& l) { return 2.0 * l.diagonal().cwiseAbs().array().log().sum(); }

double max_diag(const MatrixXd& m) {
  const double s = m.rows() > 0 ? m.diagonal().cwiseAbs().maxCoeff() : 1.0;
  return s > 0.0 ? s : 1.0;
}

// E_{N(mu, C)}[log N(u; a, L L^T)] with C given as  P P^T + D  (D symmetric).
double expected_log_density(const VectorXd& mu, const MatrixXd& p, const MatrixXd& d, const VectorXd& a,
                            const MatrixXd& l) {
  const auto lt = l.triangularView<Eigen::Lower>();
  const MatrixXd linv_p = lt.solve(p);
  const MatrixXd linv_d = lt.solve(d);
  const MatrixXd sinv_d = l.transpose().triangularView<Eigen::Upper>().solve(linv_d);
  const double trace = linv_p.squaredNorm() + sinv_d.trace();
  const double maha = lt.solve(VectorXd(mu - a)).squaredNorm();
  return -0.5 * (static_cast<double>(mu.size()) * kLog2Pi + log_det_lower(l) + trace + maha);
}

bool same_matrix(const MatrixXd& a, const MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace

TaskStream split_stream(const DataBatch& data, int n_tasks) {
  data.validate();
  if (n_tasks <= 0) throw InputError("split_stream: n_tasks must be positive");
  const Eigen::Index n = data.size();
  if (n < n_tasks) throw InputError("split_stream: fewer points than tasks");
  const Eigen::Index base = n / n_tasks;
  const Eigen::Index extra = n % n_tasks;
  TaskStream out;
  Eigen::Index at = 0;
  for (int i = 0; i < n_tasks; ++i) {
    const Eigen::Index len = base + (i >= n_tasks - extra ? 1 : 0);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(len));
    std::iota(rows.begin(), rows.end(), at);
    out.tasks.push_back(data.subset(rows));
    const Eigen::Index last = at + len - 1;
    out.boundaries.push_back(data.timestamps.size() == n ? data.timestamps[last] : data.X(last, 0));
    at += len;
  }
  return out;
}

double online_elbo(const GaussianDist& q_new, const GaussianDist& q_old, const JointPrior& prior,
                   const MatrixXd& old_prior_k11, const DataBatch& task, const MatrixXd& K_u2f,
                   const VectorXd& kff_diag, const NoiseModel& noise) {
  const Eigen::Index m2 = prior.k22.rows();
  const Eigen::Index m1 = prior.k11.rows();
  if (q_new.dim() != m2 || q_old.dim() != m1 || prior.k12.rows() != m1 || prior.k12.cols() != m2 ||
      old_prior_k11.rows() != m1) {
    throw InputError("online_elbo: block shapes are inconsistent");
  }
  const double data_term = elbo_gaussian(q_new, prior.k22, K_u2f, kff_diag, task.y, noise);
  // qt(u1) = N(A m, A S A^T + D), A = K12 K22^{-1}, D = K11 - K12 K22^{-1} K21.
  const Cholesky l22 = robust_cholesky(symmetrize(prior.k22), max_diag(prior.k22));
  const MatrixXd a = l22.solve(MatrixXd(prior.k12.transpose())).transpose();
  const MatrixXd v = l22.solve_lower(MatrixXd(prior.k12.transpose()));
  const MatrixXd d = symmetrize(prior.k11 - v.transpose() * v);
  const VectorXd mu = a * q_new.mean;
  const MatrixXd p = a * q_new.cov_chol;
  const Cholesky lp = robust_cholesky(symmetrize(old_prior_k11), max_diag(old_prior_k11));
  const double e_old = expected_log_density(mu, p, d, q_old.mean, q_old.cov_chol);
  const double e_prior = expected_log_density(mu, p, d, VectorXd::Zero(m1), lp.lower());
  return data_term + e_old - e_prior;
}

GaussianDist online_optimal_q(const GaussianDist& q_old, const JointPrior& prior,
                              const MatrixXd& old_prior_k11, const MatrixXd& K_u2f,
                              const VectorXd& y, const NoiseModel& noise) {
  const double s2 = noise.variance();
  // Gaussian pseudo-likelihood on u1: precision S1^{-1} - Kold^{-1}, shift S1^{-1} m1.
  const auto ls = q_old.cov_chol.triangularView<Eigen::Lower>();
  const MatrixXd a_s = ls.solve(prior.k12);
  const Cholesky lk = robust_cholesky(symmetrize(old_prior_k11), max_diag(old_prior_k11));
  const MatrixXd a_k = lk.solve_lower(prior.k12);
  const VectorXd eta1 = q_old.cov_chol.transpose().triangularView<Eigen::Upper>().solve(ls.solve(q_old.mean));
  MatrixXd j = K_u2f * K_u2f.transpose() / s2 + a_s.transpose() * a_s - a_k.transpose() * a_k;
  const VectorXd b = K_u2f * y / s2 + prior.k12.transpose() * eta1;
  return information_posterior(prior.k22, symmetrize(j), b);
}

MatrixXd resample_inducing(const MatrixXd& old_Z, const MatrixXd& new_X, int M, std::uint64_t seed) {
  if (old_Z.rows() > 0 && new_X.rows() > 0 && old_Z.cols() != new_X.cols()) {
    throw InputError("resample_inducing: dimension mismatch");
  }
  const Eigen::Index total = old_Z.rows() + new_X.rows();
  if (M < 1 || total < M) throw InputError("resample_inducing: not enough candidates");
  const Eigen::Index d = old_Z.rows() > 0 ? old_Z.cols() : new_X.cols();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  for (Eigen::Index i = 0; i < M; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, total - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(M));
  std::sort(idx.begin(), idx.end());
  MatrixXd z(M, d);
  for (Eigen::Index i = 0; i < M; ++i) {
    const Eigen::Index c = idx[static_cast<std::size_t>(i)];
    z.row(i) = c < old_Z.rows() ? old_Z.row(c) : new_X.row(c - old_Z.rows());
  }
  return z;
}

PivotedCholesky pivoted_cholesky_select(const Kernel& kernel, const MatrixXd& candidates, int M) {
  const Eigen::Index n = candidates.rows();
  if (M < 0 || M > n) throw InputError("pivoted_cholesky_select: M exceeds the candidate count");
  PivotedCholesky out;
  VectorXd resid = kernel_diag(kernel, candidates);
  MatrixXd factor = MatrixXd::Zero(n, M);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (int k = 0; k < M; ++k) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      if (best < 0 || resid[i] > resid[best]) best = i;
    }
    used[static_cast<std::size_t>(best)] = true;
    out.indices.push_back(best);
    const double pivot = resid[best];
    if (pivot > 1e-14 * kernel.output_scale_sq) {
      const VectorXd col = kernel_matrix(kernel, candidates, candidates.row(best)).col(0);
      VectorXd l = col - factor.leftCols(k) * factor.row(best).head(k).transpose();
      l /= std::sqrt(pivot);
      factor.col(k) = l;
      resid -= l.cwiseAbs2();
    }
    resid[best] = 0.0;
    resid = resid.cwiseMax(0.0);
    double trace = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) trace += resid[i];
    out.residual_trace.push_back(trace);
  }
  out.points.resize(M, candidates.cols());
  for (int k = 0; k < M; ++k) out.points.row(k) = candidates.row(out.indices[static_cast<std::size_t>(k)]);
  return out;
}

const char* to_string(OnlineMethod method) {
  switch (method) {
    case OnlineMethod::kOhsgpr:
      return "ohsgpr";
    case OnlineMethod::kOsgprFixedZ:
      return "osgpr-fixedz";
    case OnlineMethod::kOsgprResampleZ:
      return "osgpr-resamplez";
    case OnlineMethod::kOvc:
      return "ovc";
  }
  return "unknown";
}

OnlineModelState make_online_state(const OnlineOptions& options, const Kernel& kernel, const NoiseModel& noise) {
  kernel.validate();
  if (options.num_inducing < 1) throw InputError("online: num_inducing must be >= 1");
  if (options.stride < 1) throw InputError("online: stride must be >= 1");
  OnlineModelState s;
  s.options = options;
  s.kernel = kernel;
  s.noise = noise;
  if (options.method == OnlineMethod::kOhsgpr) {
    const HippoOperator op(options.basis, options.num_inducing);
    const double step = options.dt * (options.multidim ? options.stride : 1);
    s.path = std::make_shared<PathRecurrence>(op, step, options.scheme, kernel.input_dim());
    s.features = initial_features(sample_frequencies(kernel, options.rff_samples, options.seed), op, step);
    s.train_x.resize(0, kernel.input_dim());
    s.train_kfu.resize(0, op.dim());
  }
  if (options.method == OnlineMethod::kOsgprFixedZ) {
    if (options.fixed_z.rows() < 1 || options.fixed_z.cols() != kernel.input_dim()) {
      throw InputError("online: OSGPR-fixedZ needs fixed_z with input_dim columns");
    }
  }
  return s;
}

namespace {

double jitter_of(const Kernel& kernel) { return kRelativeJitter * kernel.output_scale_sq; }

// New information-form q over u2 given the previous state's q over u1.
void absorb(OnlineModelState& s, const MatrixXd& prev_kuu, const MatrixXd& prev_j, const VectorXd& prev_b,
            const MatrixXd& k12, bool identical, const MatrixXd& k22, const MatrixXd& kuf, const DataBatch& task) {
  const double s2 = s.noise.variance();
  const bool first = prev_kuu.rows() == 0;
  MatrixXd j = kuf * kuf.transpose() / s2;
  VectorXd b = kuf * task.y / s2;
  MatrixXd g;
  if (!first) {
    if (identical) {
      g = MatrixXd::Identity(k22.rows(), k22.rows());
    } else {
      g = robust_cholesky(prev_kuu, max_diag(prev_kuu)).solve(k12);
    }
    j += g.transpose() * prev_j * g;
    b += g.transpose() * prev_b;
  }
  j = symmetrize(j);

  if (s.options.compute_elbo) {
    OnlineStepInfo info;
    try {
      const GaussianDist q_new = information_posterior(k22, j, b);
      const VectorXd kff = kernel_diag(s.kernel, task.X);
      if (first) {
        info.elbo = elbo_gaussian(q_new, k22, kuf, kff, task.y, s.noise);
        const GaussianDist prior{VectorXd::Zero(k22.rows()), robust_cholesky(k22, max_diag(k22)).lower()};
        info.carried_elbo = elbo_gaussian(prior, k22, kuf, kff, task.y, s.noise);
      } else {
        const GaussianDist q_old = information_posterior(prev_kuu, prev_j, prev_b);
        const JointPrior jp{prev_kuu, k12, k22};
        info.elbo = online_elbo(q_new, q_old, jp, prev_kuu, task, kuf, kff, s.noise);
        const GaussianDist q_carry =
            information_posterior(k22, symmetrize(g.transpose() * prev_j * g), g.transpose() * prev_b);
        info.carried_elbo = online_elbo(q_carry, q_old, jp, prev_kuu, task, kuf, kff, s.noise);
      }
    } catch (const NumericalError&) {
      info.elbo = info.carried_elbo = std::numeric_limits<double>::quiet_NaN();
    }
    s.last_step = info;
  }
  s.q_kuu = k22;
  s.q_j = std::move(j);
  s.q_b = std::move(b);
}

OnlineModelState baseline_update(const OnlineModelState& state, const DataBatch& task) {
  OnlineModelState s = state;
  s.task_index += 1;
  if (task.size() == 0) return s;
  const OnlineOptions& o = s.options;
  MatrixXd z_new;
  switch (o.method) {
    case OnlineMethod::kOsgprFixedZ:
      z_new = o.fixed_z;
      break;
    case OnlineMethod::kOsgprResampleZ:
      z_new = resample_inducing(state.z, task.X, o.num_inducing,
                                o.seed + 7919ULL * static_cast<std::uint64_t>(state.task_index));
      break;
    case OnlineMethod::kOvc: {
      MatrixXd cand(state.z.rows() + task.size(), task.X.cols());
      if (state.z.rows() > 0) cand.topRows(state.z.rows()) = state.z;
      cand.bottomRows(task.size()) = task.X;
      z_new = pivoted_cholesky_select(s.kernel, cand, std::min<int>(o.num_inducing, static_cast<int>(cand.rows()))).points;
      break;
    }
    case OnlineMethod::kOhsgpr:
      throw StateError("baseline_update called for OHSGPR");
  }
  const MatrixXd k22 = add_jitter(kernel_matrix(s.kernel, z_new, z_new), jitter_of(s.kernel));
  const MatrixXd kuf = kernel_matrix(s.kernel, z_new, task.X);
  const bool identical = same_matrix(state.z, z_new);
  MatrixXd k12;
  if (state.z.rows() > 0) k12 = identical ? k22 : kernel_matrix(s.kernel, state.z, z_new);
  absorb(s, state.q_kuu, state.q_j, state.q_b, k12, identical, k22, kuf, task);
  s.z = std::move(z_new);
  s.seen += task.size();
  s.frozen = true;
  return s;
}

}  // namespace

OnlineModelState ohsgpr_advance(const OnlineModelState& state, const DataBatch& task, double dt, Scheme scheme,
                                std::optional<double> boundary) {
  if (state.options.method != OnlineMethod::kOhsgpr || !state.path) {
    throw StateError("ohsgpr_advance: state is not an OHSGPR model");
  }
  task.validate();
  const OnlineOptions& o = state.options;
  if (std::abs(dt - o.dt) > 1e-15 * std::max(1.0, o.dt) || scheme != o.scheme) {
    throw InputError("ohsgpr_advance: dt/scheme differ from the state's recurrence");
  }
  OnlineModelState s = state;
  s.path = std::make_shared<PathRecurrence>(*state.path);
  PathRecurrence& path = *s.path;

  if (task.size() > 0 && task.X.cols() != s.kernel.input_dim()) {
    throw InputError("ohsgpr_advance: task input dimension mismatch");
  }
  PathSegment seg;
  if (!o.multidim) {
    if (s.kernel.input_dim() != 1) throw InputError("time-series OHSGPR needs 1-D inputs");
    double t_end = boundary.value_or(-std::numeric_limits<double>::infinity());
    for (Eigen::Index i = 0; i < task.size(); ++i) {
      const double t = task.X(i, 0);
      const double floor = i == 0 ? state.data_end : task.X(i - 1, 0);
      if (t < floor - 1e-12 * std::max(1.0, std::abs(floor))) {
        throw InputError("ohsgpr_advance: timestamps out of order at row " + std::to_string(i));
      }
      if (t <= 0.0) throw InputError("ohsgpr_advance: time-series inputs must be positive");
      t_end = std::max(t_end, t);
    }
    const long target = std::isfinite(t_end)
                            ? std::max(path.steps(), static_cast<long>(std::ceil(t_end / path.step() - 1e-9)))
                            : path.steps();
    seg = path.extend_to(target);
    if (task.size() > 0) s.data_end = task.X(task.size() - 1, 0);
  } else {
    seg = strided_kfu_step(path, task.X, s.global_index, o.stride);
    s.global_index += task.size();
    if (task.timestamps.size() == task.size() && task.size() > 0) s.data_end = task.timestamps[task.size() - 1];
  }
  if (seg.weights.rows() > 0) {
    advance_features(s.features, path, seg);
    if (s.train_x.rows() > 0) s.train_kfu = advance_kfu(s.train_kfu, s.train_x, s.kernel, path, seg);
  }
  s.task_index += 1;
  if (task.size() == 0) {
    // No data term: q stays attached to the inducing variables it was formed at.
    return s;
  }
  checkpoint_features(s.features);
  const MatrixXd kuf_new = path_kfu(path, s.kernel, task.X);
  {
    MatrixXd x(s.train_x.rows() + task.size(), s.train_x.cols());
    x << s.train_x, task.X;
    MatrixXd r(s.train_kfu.rows() + task.size(), s.train_kfu.cols());
    r << s.train_kfu, kuf_new;
    s.train_x = std::move(x);
    s.train_kfu = std::move(r);
  }
  const MatrixXd k22 = add_jitter(assemble_kuu(s.features, s.kernel), jitter_of(s.kernel));
  MatrixXd k12;
  if (state.q_kuu.rows() > 0) {
    k12 = cross_kuu(s.features, static_cast<double>(state.q_steps) * path.step(), s.kernel);
  }
  absorb(s, state.q_kuu, state.q_j, state.q_b, k12, false, k22, kuf_new.transpose(), task);
  s.q_steps = path.steps();
  s.q_weights = path.weights();
  s.seen += task.size();
  s.frozen = true;
  return s;
}

OnlineModelState online_update(const OnlineModelState& state, const DataBatch& task, std::optional<double> boundary) {
  try {
    if (state.options.method == OnlineMethod::kOhsgpr) {
      return ohsgpr_advance(state, task, state.options.dt, state.options.scheme, boundary);
    }
    task.validate();
    return baseline_update(state, task);
  } catch (const OnlineUpdateError&) {
    throw;
  } catch (const NumericalError& e) {
    throw OnlineUpdateError(std::string("online_update: ") + e.what(), std::make_shared<const OnlineModelState>(state));
  }
}

GaussianDist current_q(const OnlineModelState& state) {
  if (state.q_kuu.rows() == 0) throw StateError("current_q: no data absorbed yet");
  return information_posterior(state.q_kuu, state.q_j, state.q_b);
}

MatrixXd state_cross_cov(const OnlineModelState& state, const MatrixXd& X_star) {
  if (state.q_kuu.rows() == 0) throw StateError("state_cross_cov: no data absorbed yet");
  if (state.options.method == OnlineMethod::kOhsgpr) {
    return path_kfu(state.path->points().topRows(state.q_steps), state.q_weights, state.kernel, X_star);
  }
  return kernel_matrix(state.kernel, X_star, state.z);
}

Predictive predict(const OnlineModelState& state, const MatrixXd& X_star, bool include_noise) {
  const VectorXd kss = kernel_diag(state.kernel, X_star);
  std::optional<NoiseModel> noise;
  if (include_noise) noise = state.noise;
  if (state.q_kuu.rows() == 0) {
    Predictive p;
    p.mean = VectorXd::Zero(X_star.rows());
    p.variance = kss.array() + (include_noise ? state.noise.variance() : 0.0);
    p.includes_noise = include_noise;
    return p;
  }
  return information_predict(state.q_kuu, state.q_j, state.q_b, state_cross_cov(state, X_star), kss, noise);
}

VectorXd reconstruct_posterior_mean(const OnlineModelState& state, const VectorXd& x) {
  if (state.options.method != OnlineMethod::kOhsgpr || state.options.multidim) {
    throw UnsupportedError("reconstruction needs a time-series OHSGPR model");
  }
  const GaussianDist q = current_q(state);
  const HippoOperator& op = state.path->op();
  const double t = static_cast<double>(state.q_steps) * state.path->step();
  VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = reconstruct(q.mean, op, t, x[i]);
  return out;
}

}  // namespace streamgp
