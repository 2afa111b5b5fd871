#pragma once

#include <functional>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace streamgp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class BasisKind { kLegS, kLegT, kLagT, kFouT };

/// Measure/basis pair of a HiPPO memory. LegT and FouT carry a window length.
///
/// Every family treats the remembered signal as zero before x = 0, so measure
/// supports are intersected with [0, t].
struct BasisFamily {
  BasisKind kind = BasisKind::kLegS;
  double theta = 0.0;

  static BasisFamily legs() { return {BasisKind::kLegS, 0.0}; }
  static BasisFamily legt(double window);
  static BasisFamily lagt() { return {BasisKind::kLagT, 0.0}; }
  static BasisFamily fout(double window);
};

std::string to_string(const BasisFamily& family);

enum class Scheme { kForwardEuler, kBilinear };

const char* to_string(Scheme scheme);

struct OperatorMatrices {
  MatrixXd a;  // A(t)
  VectorXd b;  // B(t)
};

/// Generator of the coefficient ODE  dc/dt = A(t) c + B(t) y(t).
///
/// `order` is the number of basis functions for the Legendre and Laguerre
/// families. FouT of order M keeps frequencies 0..M-1 as real channels
/// (1, sqrt2 cos_1, sqrt2 sin_1, ..., sqrt2 cos_{M-1}, sqrt2 sin_{M-1}), so its
/// state dimension is 2M-1.
class HippoOperator {
 public:
  HippoOperator(BasisFamily family, int order);

  const BasisFamily& family() const { return family_; }
  int order() const { return order_; }
  /// Length of the coefficient vector.
  int dim() const { return static_cast<int>(a_.rows()); }
  bool time_varying() const { return family_.kind == BasisKind::kLegS; }

  OperatorMatrices operator_matrices(double t) const;

  /// g_m^{(t)}(x) for channel m.
  double basis_eval(int m, double t, double x) const;
  /// All channels at once.
  VectorXd basis_values(double t, double x) const;
  /// omega^{(t)}(x); zero outside the family's window.
  double measure(double t, double x) const;
  /// Integration interval [lo, t] of the measure intersected with [0, t].
  std::pair<double, double> support(double t) const;

 private:
  BasisFamily family_;
  int order_;
  MatrixXd a_;  // time-invariant part of A(t)
  VectorXd b_;
};

struct GaussLegendreRule {
  VectorXd nodes;
  VectorXd weights;
};

/// n-point Gauss-Legendre rule on [lo, hi].
GaussLegendreRule gauss_legendre(double lo, double hi, int n);

/// int y(x) g_m^{(t)}(x) omega^{(t)}(x) dx over the support, for every channel.
VectorXd quadrature_coefficients(const std::function<double(double)>& signal,
                                 const HippoOperator& op, double t, int nodes);

/// One step of the discretized ODE, from step index k to k+1:
///   c_{k+1} = transition c_k + input_prev y_k + input_next y_{k+1}.
///
/// k == 0 starts from the empty history: c_1 = dt B(dt) y_1 (for LegS that is B y_1).
/// Forward Euler, k >= 1:  transition = I + dt A(k dt), input_next = dt B(k dt).
/// Bilinear, k >= 1: (I - dt/2 A((k+1)dt)) c_{k+1} = (I + dt/2 A(k dt)) c_k
///                     + dt/2 (B(k dt) y_k + B((k+1) dt) y_{k+1}).
struct StepMatrices {
  MatrixXd transition;
  VectorXd input_prev;
  VectorXd input_next;
};

StepMatrices discrete_step(const HippoOperator& op, double dt, Scheme scheme, long k);

/// Memory state c(t) of a scalar signal at t = steps * step.
struct CoefficientState {
  VectorXd coeffs;
  long steps = 0;
  double step = 1e-3;
  Scheme scheme = Scheme::kForwardEuler;
  double last_input = 0.0;  // y at end_time; the bilinear step needs it

  double end_time() const { return static_cast<double>(steps) * step; }
};

CoefficientState initial_coefficients(const HippoOperator& op, double step, Scheme scheme);

/// Advances by one step; y_next is the signal at end_time() + step.
CoefficientState step_coefficients(const CoefficientState& state, const HippoOperator& op,
                                   double y_next);

/// Drives a fresh state with samples y(i * step), i = 1..steps.
CoefficientState run_coefficients(const std::function<double(double)>& signal,
                                  const HippoOperator& op, double step, long steps, Scheme scheme);

/// sum_m c_m g_m^{(t)}(x) with t = end_time().
double reconstruct(const CoefficientState& state, const HippoOperator& op, double x);
double reconstruct(const VectorXd& coeffs, const HippoOperator& op, double t, double x);

}  // namespace streamgp
