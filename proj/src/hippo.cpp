#include "streamgp/hippo.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <gsl/gsl_integration.h>

#include "streamgp/errors.hpp"

namespace streamgp {

namespace {

// P_0..P_{n-1} at s by the three-term recurrence.
void legendre_values(double s, int n, double* out) {
  if (n <= 0) return;
  out[0] = 1.0;
  if (n == 1) return;
  out[1] = s;
  for (int k = 1; k + 1 < n; ++k) {
    out[k + 1] = ((2.0 * k + 1.0) * s * out[k] - k * out[k - 1]) / (k + 1.0);
  }
}

// L_0..L_{n-1} at s.
void laguerre_values(double s, int n, double* out) {
  if (n <= 0) return;
  out[0] = 1.0;
  if (n == 1) return;
  out[1] = 1.0 - s;
  for (int k = 1; k + 1 < n; ++k) {
    out[k + 1] = ((2.0 * k + 1.0 - s) * out[k] - k * out[k - 1]) / (k + 1.0);
  }
}

}  // namespace

BasisFamily BasisFamily::legt(double window) {
  if (!(window > 0.0)) throw InputError("LegT window must be positive");
  return {BasisKind::kLegT, window};
}

BasisFamily BasisFamily::fout(double window) {
  if (!(window > 0.0)) throw InputError("FouT window must be positive");
  return {BasisKind::kFouT, window};
}

std::string to_string(const BasisFamily& family) {
  std::ostringstream os;
  switch (family.kind) {
    case BasisKind::kLegS:
      return "legs";
    case BasisKind::kLegT:
      os << "legt(" << family.theta << ")";
      return os.str();
    case BasisKind::kLagT:
      return "lagt";
    case BasisKind::kFouT:
      os << "fout(" << family.theta << ")";
      return os.str();
  }
  return "unknown";
}

const char* to_string(Scheme scheme) {
  return scheme == Scheme::kForwardEuler ? "euler" : "bilinear";
}

HippoOperator::HippoOperator(BasisFamily family, int order) : family_(family), order_(order) {
  if (order < 1) throw InputError("HippoOperator: order must be >= 1");
  const int m = order;
  switch (family.kind) {
    case BasisKind::kLegS: {
      a_ = MatrixXd::Zero(m, m);
      b_.resize(m);
      for (int i = 0; i < m; ++i) {
        b_[i] = std::sqrt(2.0 * i + 1.0);
        for (int k = 0; k < i; ++k) a_(i, k) = -std::sqrt((2.0 * i + 1.0) * (2.0 * k + 1.0));
        a_(i, i) = -(i + 1.0);
      }
      break;
    }
    case BasisKind::kLegT: {
      if (!(family.theta > 0.0)) throw InputError("LegT window must be positive");
      a_.resize(m, m);
      b_.resize(m);
      for (int i = 0; i < m; ++i) {
        b_[i] = std::sqrt(2.0 * i + 1.0) / family.theta;
        for (int k = 0; k < m; ++k) {
          const double v = std::sqrt((2.0 * i + 1.0) * (2.0 * k + 1.0));
          const double sign = (i >= k || (i - k) % 2 == 0) ? 1.0 : -1.0;
          a_(i, k) = -sign * v / family.theta;
        }
      }
      break;
    }
    case BasisKind::kLagT: {
      a_ = MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        for (int k = 0; k <= i; ++k) a_(i, k) = -1.0;
      }
      b_ = VectorXd::Ones(m);
      break;
    }
    case BasisKind::kFouT: {
      if (!(family.theta > 0.0)) throw InputError("FouT window must be positive");
      const int n = 2 * m - 1;
      const double theta = family.theta;
      // Endpoint values of the real basis; the window start and end coincide
      // for periodic channels, which produces the rank-one correction.
      VectorXd e = VectorXd::Zero(n);
      e[0] = 1.0;
      for (int k = 1; k < m; ++k) e[2 * k - 1] = std::sqrt(2.0);
      a_ = -(e * e.transpose()) / theta;
      for (int k = 1; k < m; ++k) {
        const double freq = 2.0 * std::numbers::pi * k / theta;
        a_(2 * k - 1, 2 * k) -= freq;
        a_(2 * k, 2 * k - 1) += freq;
      }
      b_ = e / theta;
      break;
    }
  }
}

OperatorMatrices HippoOperator::operator_matrices(double t) const {
  if (family_.kind == BasisKind::kLegS) {
    if (!(t > 0.0)) throw DomainError("LegS operator matrices need t > 0");
    return {a_ / t, b_ / t};
  }
  return {a_, b_};
}

double HippoOperator::basis_eval(int m, double t, double x) const {
  if (m < 0 || m >= dim()) throw InputError("basis_eval: channel index out of range");
  return basis_values(t, x)[m];
}

VectorXd HippoOperator::basis_values(double t, double x) const {
  VectorXd out(dim());
  switch (family_.kind) {
    case BasisKind::kLegS: {
      if (!(t > 0.0)) throw DomainError("LegS basis needs t > 0");
      legendre_values(2.0 * x / t - 1.0, order_, out.data());
      for (int i = 0; i < order_; ++i) out[i] *= std::sqrt(2.0 * i + 1.0);
      break;
    }
    case BasisKind::kLegT: {
      legendre_values(2.0 * (x - t) / family_.theta + 1.0, order_, out.data());
      for (int i = 0; i < order_; ++i) out[i] *= std::sqrt(2.0 * i + 1.0);
      break;
    }
    case BasisKind::kLagT:
      laguerre_values(t - x, order_, out.data());
      break;
    case BasisKind::kFouT: {
      out[0] = 1.0;
      const double phase = 2.0 * std::numbers::pi * (t - x) / family_.theta;
      for (int k = 1; k < order_; ++k) {
        out[2 * k - 1] = std::sqrt(2.0) * std::cos(k * phase);
        out[2 * k] = std::sqrt(2.0) * std::sin(k * phase);
      }
      break;
    }
  }
  return out;
}

double HippoOperator::measure(double t, double x) const {
  switch (family_.kind) {
    case BasisKind::kLegS:
      if (!(t > 0.0)) throw DomainError("LegS measure needs t > 0");
      return (x >= 0.0 && x <= t) ? 1.0 / t : 0.0;
    case BasisKind::kLegT:
    case BasisKind::kFouT:
      return (x >= t - family_.theta && x <= t) ? 1.0 / family_.theta : 0.0;
    case BasisKind::kLagT:
      return x <= t ? std::exp(-(t - x)) : 0.0;
  }
  return 0.0;
}

std::pair<double, double> HippoOperator::support(double t) const {
  switch (family_.kind) {
    case BasisKind::kLegS:
    case BasisKind::kLagT:
      return {0.0, t};
    case BasisKind::kLegT:
    case BasisKind::kFouT:
      return {std::max(0.0, t - family_.theta), t};
  }
  return {0.0, t};
}

GaussLegendreRule gauss_legendre(double lo, double hi, int n) {
  if (n < 2) throw InputError("gauss_legendre: need at least 2 nodes");
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<size_t>(n));
  if (table == nullptr) throw NumericalError("gauss_legendre: table allocation failed");
  GaussLegendreRule rule{VectorXd(n), VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    gsl_integration_glfixed_point(lo, hi, static_cast<size_t>(i), &rule.nodes[i], &rule.weights[i], table);
  }
  gsl_integration_glfixed_table_free(table);
  return rule;
}

VectorXd quadrature_coefficients(const std::function<double(double)>& signal,
                                 const HippoOperator& op, double t, int nodes) {
  const auto [lo, hi] = op.support(t);
  VectorXd out = VectorXd::Zero(op.dim());
  if (!(hi > lo)) return out;
  const GaussLegendreRule rule = gauss_legendre(lo, hi, nodes);
  for (int i = 0; i < nodes; ++i) {
    const double x = rule.nodes[i];
    out += (rule.weights[i] * signal(x) * op.measure(t, x)) * op.basis_values(t, x);
  }
  return out;
}

StepMatrices discrete_step(const HippoOperator& op, double dt, Scheme scheme, long k) {
  if (!(dt > 0.0)) throw InputError("discrete_step: dt must be positive");
  if (k < 0) throw InputError("discrete_step: negative step index");
  const int n = op.dim();
  StepMatrices s;
  if (k == 0) {
    s.transition = MatrixXd::Zero(n, n);
    s.input_prev = VectorXd::Zero(n);
    s.input_next = dt * op.operator_matrices(dt).b;
    return s;
  }
  const double t = static_cast<double>(k) * dt;
  const OperatorMatrices left = op.operator_matrices(t);
  if (scheme == Scheme::kForwardEuler) {
    s.transition = dt * left.a;
    s.transition.diagonal().array() += 1.0;
    s.input_prev = VectorXd::Zero(n);
    s.input_next = dt * left.b;
    return s;
  }
  const OperatorMatrices right = op.operator_matrices(t + dt);
  MatrixXd lhs = -0.5 * dt * right.a;
  lhs.diagonal().array() += 1.0;
  MatrixXd rhs = 0.5 * dt * left.a;
  rhs.diagonal().array() += 1.0;
  if (op.family().kind == BasisKind::kLegS || op.family().kind == BasisKind::kLagT) {
    const auto tri = lhs.triangularView<Eigen::Lower>();
    s.transition = tri.solve(rhs);
    s.input_prev = tri.solve(VectorXd(0.5 * dt * left.b));
    s.input_next = tri.solve(VectorXd(0.5 * dt * right.b));
  } else {
    const Eigen::PartialPivLU<MatrixXd> lu(lhs);
    s.transition = lu.solve(rhs);
    s.input_prev = lu.solve(VectorXd(0.5 * dt * left.b));
    s.input_next = lu.solve(VectorXd(0.5 * dt * right.b));
  }
  return s;
}

CoefficientState initial_coefficients(const HippoOperator& op, double step, Scheme scheme) {
  if (!(step > 0.0)) throw InputError("initial_coefficients: step must be positive");
  CoefficientState s;
  s.coeffs = VectorXd::Zero(op.dim());
  s.step = step;
  s.scheme = scheme;
  return s;
}

CoefficientState step_coefficients(const CoefficientState& state, const HippoOperator& op,
                                   double y_next) {
  if (!std::isfinite(y_next)) throw InputError("step_coefficients: non-finite input");
  if (state.coeffs.size() != op.dim()) throw InputError("step_coefficients: state/operator size mismatch");
  const StepMatrices m = discrete_step(op, state.step, state.scheme, state.steps);
  CoefficientState next = state;
  next.coeffs = m.transition * state.coeffs + m.input_prev * state.last_input + m.input_next * y_next;
  next.steps = state.steps + 1;
  next.last_input = y_next;
  return next;
}

CoefficientState run_coefficients(const std::function<double(double)>& signal,
                                  const HippoOperator& op, double step, long steps,
                                  Scheme scheme) {
  CoefficientState s = initial_coefficients(op, step, scheme);
  for (long i = 1; i <= steps; ++i) s = step_coefficients(s, op, signal(static_cast<double>(i) * step));
  return s;
}

double reconstruct(const VectorXd& coeffs, const HippoOperator& op, double t, double x) {
  return coeffs.dot(op.basis_values(t, x));
}

double reconstruct(const CoefficientState& state, const HippoOperator& op, double x) {
  return reconstruct(state.coeffs, op, state.end_time(), x);
}

}  // namespace streamgp
