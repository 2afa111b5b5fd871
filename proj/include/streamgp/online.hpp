#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "streamgp/errors.hpp"
#include "streamgp/gp_core.hpp"
#include "streamgp/hippo.hpp"
#include "streamgp/interdomain.hpp"
#include "streamgp/kernels.hpp"

namespace streamgp {

struct TaskStream {
  std::vector<DataBatch> tasks;
  std::vector<double> boundaries;  // last timestamp (or pseudo-time) of each task
};

/// Contiguous equal partitions; the remainder goes to the last tasks, one extra each.
TaskStream split_stream(const DataBatch& data, int n_tasks);

/// Prior blocks over (u1, u2): u1 are the previous inducing variables, u2 the new ones.
struct JointPrior {
  MatrixXd k11;
  MatrixXd k12;
  MatrixXd k22;
};

/// ELL(task | q_new) - KL(q_new || p(u2)) + E_qt[log q_old(u1) - log p_old(u1)],
/// qt(u1) = int p(u1 | u2) q_new(u2) du2. The last term equals
/// KL(qt || p_old) - KL(qt || q_old) and stays finite when qt is singular.
double online_elbo(const GaussianDist& q_new, const GaussianDist& q_old, const JointPrior& prior,
                   const MatrixXd& old_prior_k11, const DataBatch& task, const MatrixXd& K_u2f,
                   const VectorXd& kff_diag, const NoiseModel& noise);

/// Maximizer of online_elbo over Gaussian q_new (closed form).
GaussianDist online_optimal_q(const GaussianDist& q_old, const JointPrior& prior,
                              const MatrixXd& old_prior_k11, const MatrixXd& K_u2f,
                              const VectorXd& y, const NoiseModel& noise);

/// M points drawn uniformly without replacement from [old_Z; new_X], in candidate order.
MatrixXd resample_inducing(const MatrixXd& old_Z, const MatrixXd& new_X, int M, std::uint64_t seed);

struct PivotedCholesky {
  MatrixXd points;
  std::vector<Eigen::Index> indices;
  std::vector<double> residual_trace;  // trace of the residual after each pivot
};

/// Greedy largest-residual-diagonal pivoting; ties go to the lowest index.
PivotedCholesky pivoted_cholesky_select(const Kernel& kernel, const MatrixXd& candidates, int M);

enum class OnlineMethod { kOhsgpr, kOsgprFixedZ, kOsgprResampleZ, kOvc };

const char* to_string(OnlineMethod method);

struct OnlineOptions {
  OnlineMethod method = OnlineMethod::kOhsgpr;
  int num_inducing = 50;  // HiPPO order for OHSGPR (FouT keeps 2M-1 channels)
  BasisFamily basis = BasisFamily::legs();
  double dt = 1e-3;
  Scheme scheme = Scheme::kForwardEuler;
  int rff_samples = 1000;
  std::uint64_t seed = 0;
  // Pseudo-time mode: path points are the (ordered) inputs themselves.
  bool multidim = false;
  int stride = 1;
  MatrixXd fixed_z;  // inducing inputs for OSGPR-fixedZ
  bool compute_elbo = true;
};

struct OnlineStepInfo {
  double elbo = 0.0;          // online ELBO at the new q
  double carried_elbo = 0.0;  // same objective at the previous q re-embedded without the new data
};

/// q(u) is kept in information form relative to its prior covariance K:
/// q = N(K (K + J)^{-1} b, K (K + J)^{-1} K).
struct OnlineModelState {
  OnlineOptions options;
  Kernel kernel;
  NoiseModel noise;
  bool frozen = false;
  int task_index = 0;
  long seen = 0;  // training points consumed

  MatrixXd q_kuu;
  MatrixXd q_j;
  VectorXd q_b;

  // Baselines: current inducing inputs.
  MatrixXd z;

  // OHSGPR covariance machinery.
  std::shared_ptr<PathRecurrence> path;
  FeatureState features;
  long q_steps = 0;     // path length at which q was formed
  MatrixXd q_weights;   // path weights at q_steps
  MatrixXd train_x;
  MatrixXd train_kfu;   // K_fu rows of all training inputs at the path end
  double data_end = 0.0;
  long global_index = 0;  // pseudo-time mode counter

  std::optional<OnlineStepInfo> last_step;

  int num_inducing() const { return static_cast<int>(q_kuu.rows()); }
  double end_time() const { return path ? path->end_time() : data_end; }
};

OnlineModelState make_online_state(const OnlineOptions& options, const Kernel& kernel,
                                   const NoiseModel& noise);

class OnlineUpdateError : public NumericalError {
 public:
  OnlineUpdateError(const std::string& what, std::shared_ptr<const OnlineModelState> last_good)
      : NumericalError(what), last_good_(std::move(last_good)) {}
  const OnlineModelState& last_good() const { return *last_good_; }

 private:
  std::shared_ptr<const OnlineModelState> last_good_;
};

/// Incorporates one task. OHSGPR first evolves its covariances (ohsgpr_advance).
/// `boundary` lets an empty task move the time-series clock forward.
OnlineModelState online_update(const OnlineModelState& state, const DataBatch& task,
                               std::optional<double> boundary = std::nullopt);

OnlineModelState ohsgpr_advance(const OnlineModelState& state, const DataBatch& task, double dt,
                                Scheme scheme, std::optional<double> boundary = std::nullopt);

GaussianDist current_q(const OnlineModelState& state);

/// K_{*u} against the inducing variables q is defined over.
MatrixXd state_cross_cov(const OnlineModelState& state, const MatrixXd& X_star);

Predictive predict(const OnlineModelState& state, const MatrixXd& X_star, bool include_noise = false);

/// Finite-basis reconstruction of the posterior mean, sum_m E[u_m] g_m^{(t)}(x),
/// for time-series OHSGPR.
VectorXd reconstruct_posterior_mean(const OnlineModelState& state, const VectorXd& x);

}  // namespace streamgp
