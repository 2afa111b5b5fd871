#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "streamgp/errors.hpp"
#include "streamgp/hippo.hpp"

using namespace streamgp;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

// Weighted L2 distance between the signal and a reconstruction, by quadrature.
double weighted_residual(const std::function<double(double)>& f, const VectorXd& c, const HippoOperator& op,
                         double t) {
  const auto [lo, hi] = op.support(t);
  const GaussLegendreRule rule = gauss_legendre(lo, hi, 64);
  double s = 0.0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i];
    const double r = f(x) - reconstruct(c, op, t, x);
    s += rule.weights[i] * r * r * op.measure(t, x);
  }
  return s;
}

double recurrence_error(const std::function<double(double)>& f, const HippoOperator& op, double dt, Scheme scheme,
                        double t = 1.0) {
  const long steps = std::lround(t / dt);
  const CoefficientState s = run_coefficients(f, op, dt, steps, scheme);
  return max_abs(s.coeffs - quadrature_coefficients(f, op, t, 64));
}

}  // namespace

TEST(OperatorMatrices, LegSOrderThreeAtUnitTime) {
  const HippoOperator op(BasisFamily::legs(), 3);
  const OperatorMatrices m = op.operator_matrices(1.0);
  MatrixXd a(3, 3);
  a << -1, 0, 0, -std::sqrt(3.0), -2, 0, -std::sqrt(5.0), -std::sqrt(15.0), -3;
  const VectorXd b = (VectorXd(3) << 1, std::sqrt(3.0), std::sqrt(5.0)).finished();
  EXPECT_TRUE(m.a.isApprox(a, 1e-14));
  EXPECT_TRUE(m.b.isApprox(b, 1e-14));
}

TEST(OperatorMatrices, LegSScalesAsOneOverT) {
  const HippoOperator op(BasisFamily::legs(), 5);
  const OperatorMatrices m1 = op.operator_matrices(1.0);
  const OperatorMatrices m2 = op.operator_matrices(2.0);
  EXPECT_TRUE(m2.a.isApprox(m1.a / 2.0, 1e-15));
  EXPECT_TRUE(m2.b.isApprox(m1.b / 2.0, 1e-15));
}

TEST(OperatorMatrices, LegSNeedsPositiveTime) {
  const HippoOperator op(BasisFamily::legs(), 3);
  EXPECT_THROW(op.operator_matrices(0.0), DomainError);
  EXPECT_THROW(op.operator_matrices(-1.0), DomainError);
}

TEST(OperatorMatrices, LegSEigenvaluesAreMinusOneToMinusM) {
  const HippoOperator op(BasisFamily::legs(), 7);
  const MatrixXd a = op.operator_matrices(1.0).a;
  EXPECT_TRUE(a.isLowerTriangular());
  for (int i = 0; i < 7; ++i) EXPECT_DOUBLE_EQ(a(i, i), -(i + 1.0));
}

TEST(OperatorMatrices, LagTIsTimeInvariantLowerOnes) {
  const HippoOperator op(BasisFamily::lagt(), 4);
  for (const double t : {0.5, 3.0}) {
    const OperatorMatrices m = op.operator_matrices(t);
    for (int i = 0; i < 4; ++i) {
      EXPECT_DOUBLE_EQ(m.b[i], 1.0);
      for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(m.a(i, k), i >= k ? -1.0 : 0.0);
    }
  }
}

TEST(OperatorMatrices, LegTEntries) {
  const double theta = 0.5;
  const HippoOperator op(BasisFamily::legt(theta), 4);
  const OperatorMatrices m = op.operator_matrices(1.0);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(m.b[i], std::sqrt(2.0 * i + 1.0) / theta, 1e-14);
    for (int k = 0; k < 4; ++k) {
      const double sign = (i >= k || (i - k) % 2 == 0) ? 1.0 : -1.0;
      EXPECT_NEAR(m.a(i, k), -sign * std::sqrt((2.0 * i + 1.0) * (2.0 * k + 1.0)) / theta, 1e-13);
    }
  }
}

TEST(OperatorMatrices, FouTDimensionAndWindowErrors) {
  EXPECT_EQ(HippoOperator(BasisFamily::fout(1.0), 4).dim(), 7);
  EXPECT_EQ(HippoOperator(BasisFamily::fout(1.0), 1).dim(), 1);
  EXPECT_THROW(BasisFamily::legt(0.0), InputError);
  EXPECT_THROW(BasisFamily::fout(-1.0), InputError);
  EXPECT_THROW(HippoOperator(BasisFamily::legs(), 0), InputError);
}

TEST(BasisEval, LegSSpecialValues) {
  const HippoOperator op(BasisFamily::legs(), 6);
  for (const double x : {0.0, 0.3, 0.9}) EXPECT_DOUBLE_EQ(op.basis_eval(0, 0.9, x), 1.0);
  for (int m = 0; m < 6; ++m) EXPECT_NEAR(op.basis_eval(m, 0.9, 0.9), std::sqrt(2.0 * m + 1.0), 1e-13);
  EXPECT_THROW(op.basis_eval(6, 1.0, 0.5), InputError);
}

TEST(BasisEval, LegSMatchesExplicitPolynomials) {
  const HippoOperator op(BasisFamily::legs(), 4);
  const double t = 2.0;
  for (const double x : {0.1, 0.7, 1.5}) {
    const double z = 2.0 * x / t - 1.0;
    EXPECT_NEAR(op.basis_eval(2, t, x), std::sqrt(5.0) * 0.5 * (3 * z * z - 1), 1e-13);
    EXPECT_NEAR(op.basis_eval(3, t, x), std::sqrt(7.0) * 0.5 * (5 * z * z * z - 3 * z), 1e-13);
  }
}

TEST(BasisEval, OrthonormalUnderMeasure) {
  const std::vector<std::pair<BasisFamily, double>> cases = {
      {BasisFamily::legs(), 1.3}, {BasisFamily::legt(0.8), 2.0}, {BasisFamily::lagt(), 60.0},
      {BasisFamily::fout(0.8), 2.0}};
  for (const auto& [family, t] : cases) {
    const HippoOperator op(family, 6);
    const auto [lo, hi] = op.support(t);
    const GaussLegendreRule rule = gauss_legendre(lo, hi, family.kind == BasisKind::kLagT ? 400 : 64);
    MatrixXd gram = MatrixXd::Zero(op.dim(), op.dim());
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
      const VectorXd g = op.basis_values(t, rule.nodes[i]);
      gram += rule.weights[i] * op.measure(t, rule.nodes[i]) * g * g.transpose();
    }
    EXPECT_LE((gram - MatrixXd::Identity(op.dim(), op.dim())).cwiseAbs().maxCoeff(), 1e-8) << to_string(family);
  }
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  const GaussLegendreRule r = gauss_legendre(0.0, 2.0, 5);
  double s = 0.0;
  for (Eigen::Index i = 0; i < 5; ++i) s += r.weights[i] * std::pow(r.nodes[i], 9);
  EXPECT_NEAR(s, std::pow(2.0, 10) / 10.0, 1e-10);
  EXPECT_THROW(gauss_legendre(0.0, 1.0, 1), InputError);
}

TEST(StepCoefficients, ConstantSignal) {
  const HippoOperator op(BasisFamily::legs(), 4);
  const CoefficientState s = run_coefficients([](double) { return 1.0; }, op, 1e-3, 1000, Scheme::kForwardEuler);
  EXPECT_NEAR(s.end_time(), 1.0, 1e-12);
  EXPECT_GE(s.coeffs[0], 0.99);
  EXPECT_LE(s.coeffs[0], 1.01);
  EXPECT_LE(max_abs(s.coeffs.tail(3)), 5e-3);
}

TEST(StepCoefficients, LinearSignal) {
  const HippoOperator op(BasisFamily::legs(), 4);
  const CoefficientState s = run_coefficients([](double x) { return x; }, op, 1e-3, 1000, Scheme::kForwardEuler);
  EXPECT_NEAR(s.coeffs[0], 0.5, 5e-3);
  EXPECT_NEAR(s.coeffs[1], 0.2886751, 5e-3);
  EXPECT_LE(std::abs(s.coeffs[2]), 5e-3);
  EXPECT_LE(std::abs(s.coeffs[3]), 5e-3);
}

TEST(StepCoefficients, ZeroSignalStaysZero) {
  for (const Scheme scheme : {Scheme::kForwardEuler, Scheme::kBilinear}) {
    const HippoOperator op(BasisFamily::legs(), 5);
    const CoefficientState s = run_coefficients([](double) { return 0.0; }, op, 1e-2, 100, scheme);
    EXPECT_EQ(max_abs(s.coeffs), 0.0);
  }
}

TEST(StepCoefficients, FirstStepRule) {
  const HippoOperator op(BasisFamily::legs(), 3);
  CoefficientState s = initial_coefficients(op, 1e-3, Scheme::kForwardEuler);
  s = step_coefficients(s, op, 2.0);
  EXPECT_TRUE(s.coeffs.isApprox(2.0 * op.operator_matrices(1.0).b, 1e-14));
  EXPECT_EQ(s.steps, 1);
}

TEST(StepCoefficients, RejectsNonFiniteInput) {
  const HippoOperator op(BasisFamily::legs(), 3);
  const CoefficientState s = initial_coefficients(op, 1e-3, Scheme::kForwardEuler);
  EXPECT_THROW(step_coefficients(s, op, std::nan("")), InputError);
}

TEST(StepCoefficients, ConvergenceOrder) {
  const auto f = [](double x) { return std::sin(2 * kPi * x) + 0.5 * std::cos(3 * x); };
  const HippoOperator op(BasisFamily::legs(), 6);
  const double e1 = recurrence_error(f, op, 1e-2, Scheme::kForwardEuler);
  const double e2 = recurrence_error(f, op, 5e-3, Scheme::kForwardEuler);
  const double e3 = recurrence_error(f, op, 2.5e-3, Scheme::kForwardEuler);
  EXPECT_GT(e1 / e2, 1.4);
  EXPECT_GT(e2 / e3, 1.4);
  const double b1 = recurrence_error(f, op, 1e-2, Scheme::kBilinear);
  const double b2 = recurrence_error(f, op, 5e-3, Scheme::kBilinear);
  const double b3 = recurrence_error(f, op, 2.5e-3, Scheme::kBilinear);
  EXPECT_GT(b1 / b2, 2.8);
  EXPECT_GT(b2 / b3, 2.8);
  EXPECT_LT(b3, e3);
}

TEST(StepCoefficients, OtherFamiliesTrackQuadrature) {
  // LegT and FouT reconstruct the value leaving the window.
  const auto smooth = [](double x) { return x * std::sin(3 * x); };
  EXPECT_LE(recurrence_error(smooth, HippoOperator(BasisFamily::lagt(), 6), 1e-3, Scheme::kBilinear, 3.0), 1e-4);
  EXPECT_LE(recurrence_error(smooth, HippoOperator(BasisFamily::legt(1.0), 8), 1e-3, Scheme::kBilinear, 3.0), 1e-3);
  const auto periodic = [](double x) { return std::sin(2 * kPi * x); };
  // FouT carries a start-up transient from the partially filled window that decays over later windows.
  const double early = recurrence_error(periodic, HippoOperator(BasisFamily::fout(1.0), 4), 1e-3, Scheme::kBilinear, 2.5);
  const double late = recurrence_error(periodic, HippoOperator(BasisFamily::fout(1.0), 4), 1e-3, Scheme::kBilinear, 10.0);
  EXPECT_LE(late, 1e-4);
  EXPECT_LT(late, 0.01 * early);
}

TEST(Quadrature, ConstantSignal) {
  const HippoOperator op(BasisFamily::legs(), 5);
  const VectorXd c = quadrature_coefficients([](double) { return 2.5; }, op, 1.7, 32);
  EXPECT_NEAR(c[0], 2.5, 1e-12);
  EXPECT_LE(max_abs(c.tail(4)), 1e-12);
}

TEST(Quadrature, BasisFunctionGivesUnitVector) {
  const HippoOperator op(BasisFamily::legs(), 4);
  const double t = 1.4;
  const VectorXd c = quadrature_coefficients([&](double x) { return op.basis_eval(2, t, x); }, op, t, 32);
  VectorXd e2 = VectorXd::Zero(4);
  e2[2] = 1.0;
  EXPECT_LE(max_abs(c - e2), 1e-10);
}

TEST(Quadrature, LinearSignalClosedForm) {
  const HippoOperator op(BasisFamily::legs(), 4);
  const VectorXd c = quadrature_coefficients([](double x) { return x; }, op, 1.0, 32);
  const VectorXd expected = (VectorXd(4) << 0.5, 1.0 / (2.0 * std::sqrt(3.0)), 0.0, 0.0).finished();
  EXPECT_LE(max_abs(c - expected), 1e-12);
}

TEST(Reconstruct, ZeroCoefficients) {
  const HippoOperator op(BasisFamily::legs(), 4);
  for (const double x : {0.0, 0.4, 1.0}) EXPECT_EQ(reconstruct(VectorXd::Zero(4), op, 1.0, x), 0.0);
}

TEST(Reconstruct, QuadraticSignalIsExact) {
  const HippoOperator op(BasisFamily::legs(), 3);
  const auto f = [](double x) { return 1.0 - 2.0 * x + 3.0 * x * x; };
  const double t = 2.0;
  const VectorXd c = quadrature_coefficients(f, op, t, 32);
  for (int i = 0; i < 10; ++i) {
    const double x = t * (i + 0.5) / 10.0;
    EXPECT_NEAR(reconstruct(c, op, t, x), f(x), 1e-8);
  }
}

TEST(Reconstruct, SineWithSixteenChannels) {
  const HippoOperator op(BasisFamily::legs(), 16);
  const auto f = [](double x) { return std::sin(2 * kPi * x); };
  const VectorXd c = quadrature_coefficients(f, op, 1.0, 64);
  double worst = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = 0.1 + 0.9 * i / 200.0;
    worst = std::max(worst, std::abs(reconstruct(c, op, 1.0, x) - f(x)));
  }
  EXPECT_LE(worst, 0.05);
}

TEST(Reconstruct, ProjectionMinimizesWeightedResidual) {
  const HippoOperator op(BasisFamily::legs(), 4);
  const auto f = [](double x) { return x * x * x - x; };
  const double t = 1.5;
  const VectorXd c = quadrature_coefficients(f, op, t, 64);
  const double best = weighted_residual(f, c, op, t);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.05);
  for (int k = 0; k < 20; ++k) {
    VectorXd d(4);
    for (int i = 0; i < 4; ++i) d[i] = n(rng);
    EXPECT_LT(best, weighted_residual(f, c + d, op, t));
  }
}

TEST(Reconstruct, StateOverloadUsesEndTime) {
  const HippoOperator op(BasisFamily::legs(), 6);
  const CoefficientState s = run_coefficients([](double x) { return x; }, op, 1e-3, 500, Scheme::kBilinear);
  EXPECT_NEAR(reconstruct(s, op, 0.25), 0.25, 1e-3);
}
