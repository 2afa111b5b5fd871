#include "streamgp/interdomain.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "streamgp/errors.hpp"
#include "streamgp/parallel.hpp"

namespace streamgp {

namespace {

VectorXd time_point(double t) { return VectorXd::Constant(1, t); }

void check_time_series(const Kernel& kernel, const VectorXd& anchor) {
  if (kernel.input_dim() != 1 || anchor.size() != 1) {
    throw InputError("time-series recurrence needs 1-D inputs");
  }
}

// Rows phi_m^{(t)}(x_i) * w_i for a Gauss-Legendre rule on the support at t.
MatrixXd weighted_basis(const HippoOperator& op, double t, const GaussLegendreRule& rule) {
  MatrixXd out(rule.nodes.size(), op.dim());
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i];
    out.row(i) = (rule.weights[i] * op.measure(t, x)) * op.basis_values(t, x).transpose();
  }
  return out;
}

}  // namespace

KfuRow initial_kfu_row(const VectorXd& anchor, const HippoOperator& op, double dt) {
  if (!(dt > 0.0)) throw InputError("initial_kfu_row: dt must be positive");
  return {anchor, VectorXd::Zero(op.dim()), 0, dt};
}

KfuRow step_kfu(const KfuRow& row, const HippoOperator& op, const Kernel& kernel, double dt,
                Scheme scheme) {
  check_time_series(kernel, row.anchor);
  const long k = row.steps;
  const StepMatrices m = discrete_step(op, dt, scheme, k);
  const double next = kernel_eval(kernel, row.anchor, time_point(static_cast<double>(k + 1) * dt));
  KfuRow out = row;
  out.step = dt;
  out.row = m.transition * row.row + m.input_next * next;
  if (k > 0 && scheme == Scheme::kBilinear) {
    out.row += m.input_prev * kernel_eval(kernel, row.anchor, time_point(static_cast<double>(k) * dt));
  }
  out.steps = k + 1;
  return out;
}

KfuRow backfill_kfu(const VectorXd& x_new, const HippoOperator& op, const Kernel& kernel,
                    double end_time, double dt, Scheme scheme) {
  if (!(end_time > 0.0)) throw InputError("backfill_kfu: end_time must be positive");
  const long steps = std::lround(end_time / dt);
  KfuRow row = initial_kfu_row(x_new, op, dt);
  for (long i = 0; i < steps; ++i) row = step_kfu(row, op, kernel, dt, scheme);
  return row;
}

VectorXd quadrature_kfu(const Kernel& kernel, const VectorXd& x_n, const HippoOperator& op,
                        double t, int nodes) {
  check_time_series(kernel, x_n);
  const auto [lo, hi] = op.support(t);
  if (!(hi > lo)) return VectorXd::Zero(op.dim());
  const GaussLegendreRule rule = gauss_legendre(lo, hi, nodes);
  const MatrixXd phi = weighted_basis(op, t, rule);
  const MatrixXd k = kernel_matrix(kernel, x_n.transpose(), rule.nodes);
  return (k * phi).transpose();
}

MatrixXd quadrature_cross_kuu(const Kernel& kernel, const HippoOperator& op, double t1, double t2,
                              int nodes) {
  if (kernel.input_dim() != 1) throw InputError("quadrature_kuu needs a 1-D kernel");
  const auto [lo1, hi1] = op.support(t1);
  const auto [lo2, hi2] = op.support(t2);
  if (!(hi1 > lo1) || !(hi2 > lo2)) return MatrixXd::Zero(op.dim(), op.dim());
  const GaussLegendreRule r1 = gauss_legendre(lo1, hi1, nodes);
  const GaussLegendreRule r2 = gauss_legendre(lo2, hi2, nodes);
  const MatrixXd p1 = weighted_basis(op, t1, r1);
  const MatrixXd p2 = weighted_basis(op, t2, r2);
  return p1.transpose() * kernel_matrix(kernel, r1.nodes, r2.nodes) * p2;
}

MatrixXd quadrature_kuu(const Kernel& kernel, const HippoOperator& op, double t, int nodes) {
  const MatrixXd k = quadrature_cross_kuu(kernel, op, t, t, nodes);
  return 0.5 * (k + k.transpose());
}

PathRecurrence::PathRecurrence(HippoOperator op, double step, Scheme scheme, int input_dim)
    : op_(std::move(op)), step_(step), scheme_(scheme) {
  if (!(step > 0.0)) throw InputError("PathRecurrence: step must be positive");
  if (input_dim < 1) throw InputError("PathRecurrence: input_dim must be >= 1");
  points_.resize(0, input_dim);
  weights_.resize(0, op_.dim());
}

PathSegment PathRecurrence::extend(const MatrixXd& new_points) {
  if (new_points.cols() != points_.cols()) throw InputError("PathRecurrence: point dimension mismatch");
  const int dim = op_.dim();
  const long k0 = steps();
  const long n = static_cast<long>(new_points.rows());
  PathSegment seg;
  seg.first = std::max<long>(k0 - 1, 0);
  const long rows = k0 + n - seg.first;
  seg.weights = MatrixXd::Zero(rows, dim);
  MatrixXd prop = MatrixXd::Identity(dim, dim);

  // Backward sweep: prop holds the transition from step k+1 to the end.
  std::optional<StepMatrices> fixed;
  for (long k = k0 + n - 1; k >= k0; --k) {
    const StepMatrices* s = nullptr;
    StepMatrices local;
    if (!op_.time_varying() && k >= 1) {
      if (!fixed) fixed = discrete_step(op_, step_, scheme_, k);
      s = &*fixed;
    } else {
      local = discrete_step(op_, step_, scheme_, k);
      s = &local;
    }
    // Source y_{k+1} sits at 0-based path index k; y_k at k-1.
    seg.weights.row(k - seg.first).noalias() += (prop * s->input_next).transpose();
    if (k >= 1 && scheme_ == Scheme::kBilinear) {
      seg.weights.row(k - 1 - seg.first).noalias() += (prop * s->input_prev).transpose();
    }
    prop = prop * s->transition;
  }
  seg.propagator = prop;

  MatrixXd w = MatrixXd::Zero(k0 + n, dim);
  if (k0 > 0) w.topRows(k0).noalias() = weights_ * prop.transpose();
  w.middleRows(seg.first, rows) += seg.weights;
  weights_ = std::move(w);
  MatrixXd p(k0 + n, points_.cols());
  p.topRows(k0) = points_;
  p.bottomRows(n) = new_points;
  points_ = std::move(p);
  return seg;
}

PathSegment PathRecurrence::extend_to(long target_steps) {
  if (points_.cols() != 1) throw InputError("extend_to: time-series paths only");
  if (target_steps < steps()) throw InputError("extend_to: cannot move backwards");
  const long k0 = steps();
  MatrixXd pts(target_steps - k0, 1);
  for (long i = 0; i < target_steps - k0; ++i) pts(i, 0) = static_cast<double>(k0 + i + 1) * step_;
  return extend(pts);
}

MatrixXd path_kfu(const MatrixXd& points, const MatrixXd& weights, const Kernel& kernel,
                  const MatrixXd& anchors) {
  if (points.rows() != weights.rows()) throw InputError("path_kfu: points/weights mismatch");
  MatrixXd out = MatrixXd::Zero(anchors.rows(), weights.cols());
  if (points.rows() == 0 || anchors.rows() == 0) return out;
  constexpr Eigen::Index kPathChunk = 4096;
  parallel_for(static_cast<std::size_t>(anchors.rows()), [&](std::size_t b, std::size_t e) {
    const auto count = static_cast<Eigen::Index>(e - b);
    const MatrixXd a = anchors.middleRows(static_cast<Eigen::Index>(b), count);
    for (Eigen::Index p0 = 0; p0 < points.rows(); p0 += kPathChunk) {
      const Eigen::Index len = std::min(kPathChunk, points.rows() - p0);
      out.middleRows(static_cast<Eigen::Index>(b), count).noalias() +=
          kernel_matrix(kernel, a, points.middleRows(p0, len)) * weights.middleRows(p0, len);
    }
  }, 16);
  return out;
}

MatrixXd path_kfu(const PathRecurrence& path, const Kernel& kernel, const MatrixXd& anchors) {
  return path_kfu(path.points(), path.weights(), kernel, anchors);
}

MatrixXd advance_kfu(const MatrixXd& rows, const MatrixXd& anchors, const Kernel& kernel,
                     const PathRecurrence& path, const PathSegment& segment) {
  if (rows.rows() != anchors.rows()) throw InputError("advance_kfu: rows/anchors mismatch");
  const MatrixXd pts = path.points().middleRows(segment.first, segment.weights.rows());
  MatrixXd out = rows * segment.propagator.transpose();
  if (anchors.rows() > 0) out.noalias() += kernel_matrix(kernel, anchors, pts) * segment.weights;
  return out;
}

FeatureState initial_features(FrequencyDraws draws, const HippoOperator& op, double dt) {
  if (!(dt > 0.0)) throw InputError("initial_features: dt must be positive");
  FeatureState fs;
  const int n = draws.count();
  fs.draws = std::move(draws);
  fs.cos_features = MatrixXd::Zero(op.dim(), n);
  fs.sin_features = MatrixXd::Zero(op.dim(), n);
  fs.step = dt;
  return fs;
}

FeatureState step_features(const FeatureState& fs, const HippoOperator& op, double dt,
                           Scheme scheme) {
  if (fs.draws.frequencies.cols() != 1) throw InputError("step_features: time-series mode needs 1-D frequencies");
  const long k = fs.steps;
  const StepMatrices m = discrete_step(op, dt, scheme, k);
  const Eigen::ArrayXd w = fs.draws.frequencies.col(0).array();
  const Eigen::ArrayXd next = w * (static_cast<double>(k + 1) * dt);
  FeatureState out = fs;
  out.step = dt;
  out.cos_features = m.transition * fs.cos_features + m.input_next * next.cos().matrix().transpose();
  out.sin_features = m.transition * fs.sin_features + m.input_next * next.sin().matrix().transpose();
  if (k > 0 && scheme == Scheme::kBilinear) {
    const Eigen::ArrayXd prev = w * (static_cast<double>(k) * dt);
    out.cos_features += m.input_prev * prev.cos().matrix().transpose();
    out.sin_features += m.input_prev * prev.sin().matrix().transpose();
  }
  out.steps = k + 1;
  return out;
}

void advance_features(FeatureState& fs, const PathRecurrence& path, const PathSegment& segment) {
  if (fs.draws.frequencies.cols() != path.input_dim()) {
    throw InputError("advance_features: frequency/path dimension mismatch");
  }
  const MatrixXd pts = path.points().middleRows(segment.first, segment.weights.rows());
  const MatrixXd vt = segment.weights.transpose();
  const auto n = static_cast<std::size_t>(fs.samples());
  MatrixXd cos_new(fs.cos_features.rows(), fs.samples());
  MatrixXd sin_new(fs.sin_features.rows(), fs.samples());
  parallel_for((n + 255) / 256, [&](std::size_t b, std::size_t e) {
    for (std::size_t blk = b; blk < e; ++blk) {
      const auto c0 = static_cast<Eigen::Index>(blk * 256);
      const Eigen::Index len = std::min<Eigen::Index>(256, fs.samples() - c0);
      const Eigen::ArrayXXd phase = (pts * fs.draws.frequencies.middleRows(c0, len).transpose()).array();
      cos_new.middleCols(c0, len).noalias() = segment.propagator * fs.cos_features.middleCols(c0, len);
      cos_new.middleCols(c0, len).noalias() += vt * phase.cos().matrix();
      sin_new.middleCols(c0, len).noalias() = segment.propagator * fs.sin_features.middleCols(c0, len);
      sin_new.middleCols(c0, len).noalias() += vt * phase.sin().matrix();
    }
  }, 1);
  fs.cos_features = std::move(cos_new);
  fs.sin_features = std::move(sin_new);
  fs.steps = path.steps();
  fs.step = path.step();
}

void checkpoint_features(FeatureState& fs) {
  FeatureCheckpoint cp{fs.steps, fs.end_time(), fs.cos_features, fs.sin_features};
  if (!fs.checkpoints.empty()) {
    if (fs.checkpoints.back().steps == fs.steps) {
      fs.checkpoints.back() = std::move(cp);
      return;
    }
    if (fs.checkpoints.back().steps > fs.steps) throw StateError("checkpoint_features: time went backwards");
  }
  fs.checkpoints.push_back(std::move(cp));
}

const FeatureCheckpoint& find_checkpoint(const FeatureState& fs, double t) {
  const long steps = std::lround(t / fs.step);
  for (const auto& cp : fs.checkpoints) {
    if (cp.steps == steps && std::abs(cp.time - t) <= 1e-9 * std::max(1.0, std::abs(t))) return cp;
  }
  throw StateError("no feature checkpoint at t = " + std::to_string(t));
}

MatrixXd checkpoint_kuu(const FeatureCheckpoint& cp, const Kernel& kernel, int samples) {
  MatrixXd k = (kernel.output_scale_sq / samples) *
               (cp.cos_features * cp.cos_features.transpose() + cp.sin_features * cp.sin_features.transpose());
  return 0.5 * (k + k.transpose());
}

MatrixXd assemble_kuu(const FeatureState& fs, const Kernel& kernel) {
  if (fs.samples() < 1) throw InputError("assemble_kuu: no frequency samples");
  MatrixXd k = (kernel.output_scale_sq / fs.samples()) *
               (fs.cos_features * fs.cos_features.transpose() + fs.sin_features * fs.sin_features.transpose());
  return 0.5 * (k + k.transpose());
}

MatrixXd cross_kuu(const FeatureState& fs, double t_old, const Kernel& kernel) {
  if (std::lround(t_old / fs.step) == fs.steps) return assemble_kuu(fs, kernel);
  const FeatureCheckpoint& cp = find_checkpoint(fs, t_old);
  return (kernel.output_scale_sq / fs.samples()) *
         (cp.cos_features * fs.cos_features.transpose() + cp.sin_features * fs.sin_features.transpose());
}

KuuDirectOdeState initial_kuu_direct(const HippoOperator& op, double dt) {
  if (op.family().kind != BasisKind::kLegS) throw UnsupportedError("direct K_uu ODE is LegS-only");
  if (!(dt > 0.0)) throw InputError("initial_kuu_direct: dt must be positive");
  return {MatrixXd::Zero(op.dim(), op.dim()), VectorXd::Zero(op.dim()), 0, dt};
}

KuuDirectOdeState step_kuu_direct(const KuuDirectOdeState& state, const HippoOperator& op,
                                  const Kernel& kernel, double dt) {
  if (op.family().kind != BasisKind::kLegS) throw UnsupportedError("direct K_uu ODE is LegS-only");
  check_time_series(kernel, VectorXd::Zero(1));
  KuuDirectOdeState out = state;
  out.step = dt;
  const long k = state.steps;
  if (k == 0) {
    const double t1 = dt;
    const VectorXd c = backfill_kfu(time_point(t1), op, kernel, t1, dt, Scheme::kForwardEuler).row;
    const VectorXd b = op.operator_matrices(t1).b;
    out.kuu = dt * (b * c.transpose() + c * b.transpose());
  } else {
    const double t = static_cast<double>(k) * dt;
    const OperatorMatrices m = op.operator_matrices(t);
    const VectorXd& c = state.boundary_coeffs;
    const MatrixXd ak = m.a * state.kuu;
    out.kuu = state.kuu + dt * (ak + ak.transpose() + m.b * c.transpose() + c * m.b.transpose());
  }
  out.kuu = 0.5 * (out.kuu + out.kuu.transpose());
  out.steps = k + 1;
  const double t_next = static_cast<double>(k + 1) * dt;
  out.boundary_coeffs = backfill_kfu(time_point(t_next), op, kernel, t_next, dt, Scheme::kForwardEuler).row;
  return out;
}

}  // namespace streamgp
