#pragma once

#include <vector>

#include <Eigen/Dense>

#include "streamgp/hippo.hpp"
#include "streamgp/kernels.hpp"

namespace streamgp {

/// [K_fu]_{n,:} for one training input: the HiPPO coefficients of the source
/// s -> k(anchor, s) at end_time. Time-series mode only (1-D inputs).
struct KfuRow {
  VectorXd anchor;
  VectorXd row;
  long steps = 0;
  double step = 1e-3;

  double end_time() const { return static_cast<double>(steps) * step; }
};

KfuRow initial_kfu_row(const VectorXd& anchor, const HippoOperator& op, double dt);

/// One step with source k(anchor, (steps + 1) dt).
KfuRow step_kfu(const KfuRow& row, const HippoOperator& op, const Kernel& kernel, double dt,
                Scheme scheme);

/// Row for an input first seen at end_time: step_kfu repeated from t = 0.
KfuRow backfill_kfu(const VectorXd& x_new, const HippoOperator& op, const Kernel& kernel,
                    double end_time, double dt, Scheme scheme);

/// Gauss-Legendre value of int k(x_n, x) phi_m^{(t)}(x) dx.
VectorXd quadrature_kfu(const Kernel& kernel, const VectorXd& x_n, const HippoOperator& op,
                        double t, int nodes);

/// Nested Gauss-Legendre value of int int k(x, x') phi_l^{(t1)}(x) phi_m^{(t2)}(x') dx dx'.
MatrixXd quadrature_cross_kuu(const Kernel& kernel, const HippoOperator& op, double t1, double t2,
                              int nodes);
MatrixXd quadrature_kuu(const Kernel& kernel, const HippoOperator& op, double t, int nodes);

/// Linear map from the source samples along a path to the coefficients.
///
/// Path point i (1-based) is visited at time i * step. With y_i the source at
/// point i, the recurrence state after the last point is weights()^T y, so the
/// coefficients for any new source (a new anchor, a new frequency) come from
/// a single product instead of a fresh time loop.
struct PathSegment {
  long first = 0;        // 0-based path index of the first weight row
  MatrixXd propagator;   // state transition over the segment
  MatrixXd weights;      // one row per path point from `first` to the end
};

class PathRecurrence {
 public:
  PathRecurrence(HippoOperator op, double step, Scheme scheme, int input_dim);

  const HippoOperator& op() const { return op_; }
  double step() const { return step_; }
  Scheme scheme() const { return scheme_; }
  int input_dim() const { return static_cast<int>(points_.cols()); }
  long steps() const { return static_cast<long>(points_.rows()); }
  double end_time() const { return static_cast<double>(steps()) * step_; }

  const MatrixXd& points() const { return points_; }
  const MatrixXd& weights() const { return weights_; }

  /// Appends path points (rows) and returns the segment used to advance
  /// states that were current before the call.
  PathSegment extend(const MatrixXd& new_points);
  /// Time-series convenience: appends grid times until steps() == target_steps.
  PathSegment extend_to(long target_steps);

 private:
  HippoOperator op_;
  double step_;
  Scheme scheme_;
  MatrixXd points_;
  MatrixXd weights_;
};

/// Rows of K_fu for `anchors` at the path's end, from weights(). Rows of
/// `anchors` are inputs.
MatrixXd path_kfu(const PathRecurrence& path, const Kernel& kernel, const MatrixXd& anchors);
/// Same with an explicit (points, weights) snapshot.
MatrixXd path_kfu(const MatrixXd& points, const MatrixXd& weights, const Kernel& kernel,
                  const MatrixXd& anchors);

/// Advances K_fu rows that were current at the start of `segment`.
MatrixXd advance_kfu(const MatrixXd& rows, const MatrixXd& anchors, const Kernel& kernel,
                     const PathRecurrence& path, const PathSegment& segment);

struct FeatureCheckpoint {
  long steps = 0;
  double time = 0.0;
  MatrixXd cos_features;
  MatrixXd sin_features;
};

/// HiPPO coefficients of the random Fourier sources cos(w_n . s), sin(w_n . s)
/// along the path; one column per frequency.
struct FeatureState {
  FrequencyDraws draws;
  MatrixXd cos_features;  // dim x N
  MatrixXd sin_features;  // dim x N
  long steps = 0;
  double step = 1e-3;
  std::vector<FeatureCheckpoint> checkpoints;

  double end_time() const { return static_cast<double>(steps) * step; }
  int samples() const { return draws.count(); }
};

FeatureState initial_features(FrequencyDraws draws, const HippoOperator& op, double dt);

/// Per-step form in time-series mode: sources cos(w (steps+1) dt), sin(w (steps+1) dt).
FeatureState step_features(const FeatureState& fs, const HippoOperator& op, double dt,
                           Scheme scheme);

/// Segment form; works for any path.
void advance_features(FeatureState& fs, const PathRecurrence& path, const PathSegment& segment);

/// Snapshot at the current end time; replaces an existing snapshot at the same step.
void checkpoint_features(FeatureState& fs);
const FeatureCheckpoint& find_checkpoint(const FeatureState& fs, double t);

/// (sigma_f^2 / N) Z Z^T over cosine and sine features.
MatrixXd assemble_kuu(const FeatureState& fs, const Kernel& kernel);
/// Cov(u^{(t_old)}, u^{(end_time)}) from the checkpoint at t_old.
MatrixXd cross_kuu(const FeatureState& fs, double t_old, const Kernel& kernel);
MatrixXd checkpoint_kuu(const FeatureCheckpoint& cp, const Kernel& kernel, int samples);

/// Direct integration of dK/dt = A K + K A^T + B c^T + c B^T for LegS, where
/// c is the coefficient vector of k(t, .) at time t. Forward Euler.
///
/// The source moves with t, so c is rebuilt from t = 0 at every step; the
/// system is stiff and poorly conditioned at coarse steps. Kept for comparison.
struct KuuDirectOdeState {
  MatrixXd kuu;
  VectorXd boundary_coeffs;
  long steps = 0;
  double step = 1e-3;

  double end_time() const { return static_cast<double>(steps) * step; }
};

KuuDirectOdeState initial_kuu_direct(const HippoOperator& op, double dt);
KuuDirectOdeState step_kuu_direct(const KuuDirectOdeState& state, const HippoOperator& op,
                                  const Kernel& kernel, double dt);

}  // namespace streamgp
