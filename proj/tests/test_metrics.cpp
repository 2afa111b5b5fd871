#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "streamgp/errors.hpp"
#include "streamgp/metrics.hpp"

using namespace streamgp;

namespace {

Predictive make_pred(const VectorXd& mean, const VectorXd& var) {
  Predictive p;
  p.mean = mean;
  p.variance = var;
  p.includes_noise = true;
  return p;
}

VectorXd randn(int n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  return VectorXd::NullaryExpr(n, [&] { return g(rng); });
}

}  // namespace

TEST(Rmse, Examples) {
  const VectorXd y = (VectorXd(3) << 1.0, 2.0, 3.0).finished();
  EXPECT_EQ(rmse(y, y), 0.0);
  EXPECT_DOUBLE_EQ(rmse(VectorXd::Zero(2), (VectorXd(2) << 1.0, -1.0).finished()), 1.0);
  EXPECT_THROW(rmse(VectorXd::Zero(2), VectorXd::Zero(3)), InputError);
  EXPECT_THROW(rmse(VectorXd(), VectorXd()), InputError);
}

TEST(Rmse, MatchesNaiveLoop) {
  std::mt19937_64 rng(1);
  const VectorXd a = randn(1000, rng), b = randn(1000, rng);
  double s = 0.0;
  for (int i = 0; i < 1000; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  EXPECT_NEAR(rmse(a, b), std::sqrt(s / 1000.0), 1e-12);
}

TEST(Nlpd, UnitVarianceAtMean) {
  const VectorXd y = (VectorXd(4) << 0.3, -1.0, 2.0, 5.0).finished();
  EXPECT_NEAR(nlpd(make_pred(y, VectorXd::Ones(4)), y), 0.9189385, 1e-7);
  EXPECT_NEAR(nlpd(make_pred(y, VectorXd::Constant(4, 4.0)), y) - nlpd(make_pred(y, VectorXd::Ones(4)), y),
              0.5 * std::log(4.0), 1e-12);
}

TEST(Nlpd, ZeroVarianceRejected) {
  EXPECT_THROW(nlpd(make_pred(VectorXd::Zero(2), VectorXd::Zero(2)), VectorXd::Zero(2)), InputError);
}

TEST(Nlpd, AlgebraicIdentity) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  const VectorXd mu = randn(200, rng), y = randn(200, rng);
  const VectorXd var = VectorXd::NullaryExpr(200, [&] { return u(rng); });
  const VectorXd sd = var.cwiseSqrt();
  const double z2 = ((y - mu).array() / sd.array()).square().mean();
  const double expected = 0.5 * std::log(2 * std::numbers::pi) + 0.5 * z2 + sd.array().log().mean();
  EXPECT_NEAR(nlpd(make_pred(mu, var), y), expected, 1e-10);
  double naive = 0.0;
  for (int i = 0; i < 200; ++i) {
    naive -= -0.5 * std::log(2 * std::numbers::pi * var[i]) - 0.5 * (y[i] - mu[i]) * (y[i] - mu[i]) / var[i];
  }
  EXPECT_NEAR(nlpd(make_pred(mu, var), y), naive / 200.0, 1e-10);
}

TEST(Quantile, LinearInterpolation) {
  const VectorXd s = (VectorXd(5) << 0.0, 1.0, 2.0, 3.0, 4.0).finished();
  EXPECT_DOUBLE_EQ(empirical_quantile(s, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(empirical_quantile(s, 0.125), 0.5);
  EXPECT_DOUBLE_EQ(empirical_quantile(s, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(empirical_quantile(s, 1.0), 4.0);
}

TEST(Ece, MedianTargetsGiveFullCoverage) {
  std::mt19937_64 rng(3);
  const int S = 101, N = 20;
  MatrixXd samples(S, N);
  VectorXd y(N);
  for (int i = 0; i < N; ++i) {
    samples.col(i) = randn(S, rng);
    VectorXd c = samples.col(i);
    std::sort(c.data(), c.data() + S);
    y[i] = c[S / 2];
  }
  EXPECT_NEAR(ece(samples, y), 0.5, 1e-12);
}

TEST(Ece, TargetsOutsideRangeGiveZeroCoverage) {
  std::mt19937_64 rng(4);
  const MatrixXd samples = MatrixXd::NullaryExpr(100, 30, [&] { return std::normal_distribution<double>(0, 1)(rng); });
  EXPECT_NEAR(ece(samples, VectorXd::Constant(30, 100.0)), 0.5, 1e-12);
}

TEST(Ece, CalibratedSamples) {
  std::mt19937_64 rng(5);
  const int S = 2000, N = 5000;
  std::normal_distribution<double> g(0.0, 1.0);
  const MatrixXd samples = MatrixXd::NullaryExpr(S, N, [&] { return g(rng); });
  const VectorXd y = VectorXd::NullaryExpr(N, [&] { return g(rng); });
  EXPECT_LE(ece(samples, y), 0.02);
}

TEST(Ece, InvariantToMonotoneRescaling) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  const MatrixXd samples = MatrixXd::NullaryExpr(100, 50, [&] { return g(rng); });
  const VectorXd y = VectorXd::NullaryExpr(50, [&] { return 1.3 * g(rng); });
  const double base = ece(samples, y);
  auto f = [](double v) { return 2.5 * v + 1.0; };
  EXPECT_NEAR(ece(samples.unaryExpr(f), y.unaryExpr(f)), base, 1e-12);
  EXPECT_GE(base, 0.0);
  EXPECT_LE(base, 1.0);
}

TEST(Ece, NeedsTwoSamples) {
  EXPECT_THROW(ece(MatrixXd::Zero(1, 3), VectorXd::Zero(3)), InputError);
}
