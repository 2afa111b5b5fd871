// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "streamgp/bench.hpp"
#include "streamgp/interdomain.hpp"
#include "streamgp/online.hpp"

using namespace streamgp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double smooth_signal(double t) { return std::sin(2 * M_PI * t) + 0.5 * std::cos(3 * t); }

double coefficient_error(const HippoOperator& op, double dt, Scheme scheme) {
  const long steps = std::lround(1.0 / dt);
  const CoefficientState s = run_coefficients(smooth_signal, op, dt, steps, scheme);
  return max_abs(s.coeffs - quadrature_coefficients(smooth_signal, op, 1.0, 64));
}

void criterion1() {
  const auto t0 = Clock::now();
  const HippoOperator op(BasisFamily::legs(), 8);
  const double e1 = coefficient_error(op, 1e-3, Scheme::kForwardEuler);
  const double e2 = coefficient_error(op, 2e-3, Scheme::kForwardEuler);
  const double b1 = coefficient_error(op, 1e-3, Scheme::kBilinear);
  const double b2 = coefficient_error(op, 2e-3, Scheme::kBilinear);
  const double re = e2 / e1, rb = b2 / b1;
  const double secs = seconds_since(t0);
  const bool pass = e1 <= 1e-2 && b1 <= 1e-4 && std::abs(re - 2.0) <= 0.6 && std::abs(rb - 4.0) <= 1.2 && secs < 1.0;
  report(1, pass,
         fmt("euler err %.3g (<=1e-2), bilinear err %.3g (<=1e-4), halving ratios %.2f (2+-30%%) / %.2f (4+-30%%), %.2fs",
             e1, b1, re, rb, secs));
}

void criterion2() {
  const auto t0 = Clock::now();
  const Kernel k = Kernel::ard_rbf(1.0, 0.5);
  const HippoOperator op(BasisFamily::legs(), 6);
  const double dt = 1e-3;
  const MatrixXd quad = quadrature_kuu(k, op, 1.0, 64);
  PathRecurrence path(op, dt, Scheme::kForwardEuler, 1);
  const PathSegment seg = path.extend_to(1000);
  double mean_err = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    FeatureState fs = initial_features(sample_frequencies(k, 100000, seed), op, dt);
    advance_features(fs, path, seg);
    mean_err += (assemble_kuu(fs, k) - quad).norm() / quad.norm() / 5.0;
  }
  const MatrixXd anchors = VectorXd::LinSpaced(11, 0.0, 1.0);
  const MatrixXd rows = path_kfu(path, k, anchors);
  double kfu_err = 0.0;
  for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
    kfu_err = std::max(kfu_err, max_abs(rows.row(i).transpose() - quadrature_kfu(k, anchors.row(i).transpose(), op, 1.0, 64)));
  }
  const double secs = seconds_since(t0);
  report(2, mean_err <= 0.05 && kfu_err <= 1e-2 && secs < 30.0,
         fmt("K_uu rel Frobenius %.4f (<=0.05, mean of 5 seeds, N=1e5), K_fu inf-norm %.3g (<=1e-2), %.1fs", mean_err,
             kfu_err, secs));
}

DataBatch sine_series(int n, std::uint64_t seed) {
  return generate_synthetic("sine-drift", n, 0.2, seed);
}

void criterion3() {
  const Kernel k = Kernel::ard_rbf(1.0, 0.1);
  const NoiseModel noise(0.04);
  const DataBatch d = sine_series(1000, 0);
  const MatrixXd Z = VectorXd::LinSpaced(30, 0.0, 1.0);
  OnlineOptions o;
  o.method = OnlineMethod::kOsgprFixedZ;
  o.num_inducing = 30;
  o.fixed_z = Z;
  OnlineModelState s = make_online_state(o, k, noise);
  const TaskStream st = split_stream(d, 10);
  for (const DataBatch& t : st.tasks) s = online_update(s, t);
  const MatrixXd Kuu = add_jitter(kernel_matrix(k, Z, Z), kRelativeJitter * k.output_scale_sq);
  const GaussianDist qb = sgpr_optimal_q(Kuu, kernel_matrix(k, Z, d.X), d.y, noise);
  const MatrixXd Xs = VectorXd::LinSpaced(201, 0.0, 1.1);
  const Predictive a = predict(s, Xs);
  const Predictive b = svgp_predict(qb, Kuu, kernel_matrix(k, Xs, Z), kernel_diag(k, Xs));
  const double stream_gap = std::max(max_abs(a.mean - b.mean), max_abs(a.variance - b.variance));

  const OnlineModelState one = online_update(make_online_state(o, k, noise), st.tasks[0]);
  const GaussianDist q1 = current_q(one);
  const GaussianDist r1 = sgpr_optimal_q(Kuu, kernel_matrix(k, Z, st.tasks[0].X), st.tasks[0].y, noise);
  const double single_gap = std::max(max_abs(q1.mean - r1.mean), max_abs(q1.covariance() - r1.covariance()));
  report(3, stream_gap <= 1e-6 && single_gap <= 1e-10,
         fmt("10-task fixed-Z vs batch SGPR max gap %.2e (<=1e-6), single task vs optimal q %.2e (<=1e-10)", stream_gap,
             single_gap));
}

void criterion4() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-2.0, 2.0), ls(0.2, 1.5), sn(0.01, 0.5);
  double worst_bound = -1e300, worst_elbo = 0.0, worst_exact = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const Kernel k = Kernel::ard_rbf(0.5 + ls(rng), ls(rng));
    const NoiseModel noise(sn(rng));
    DataBatch d;
    d.X = MatrixXd::NullaryExpr(40, 1, [&] { return u(rng); });
    d.y = d.X.col(0).array().sin() + 0.1 * VectorXd::NullaryExpr(40, [&] { return u(rng); }).array();
    const MatrixXd Z = MatrixXd::NullaryExpr(8, 1, [&] { return u(rng); });
    const MatrixXd Kuu = add_jitter(kernel_matrix(k, Z, Z), kRelativeJitter * k.output_scale_sq);
    const MatrixXd Kuf = kernel_matrix(k, Z, d.X);
    const VectorXd kff = kernel_diag(k, d.X);
    const double lml = log_marginal_likelihood(k, noise, d);
    const double bound = collapsed_bound(Kuu, Kuf, kff, d.y, noise);
    const double elbo = elbo_gaussian(sgpr_optimal_q(Kuu, Kuf, d.y, noise), Kuu, Kuf, kff, d.y, noise);
    worst_bound = std::max(worst_bound, bound - lml);
    worst_elbo = std::max(worst_elbo, std::abs(elbo - bound));

    // Z = X on a jittered grid; clustered random inputs make Kxx singular to working precision.
    DataBatch small;
    small.X = VectorXd::LinSpaced(8, -1.75, 1.75) + 0.1 * VectorXd::NullaryExpr(8, [&] { return u(rng); }) / 2.0;
    small.y = small.X.col(0).array().sin();
    const MatrixXd Kxx = kernel_matrix(k, small.X, small.X);
    const MatrixXd Kj = add_jitter(Kxx, 1e-10);
    const GaussianDist q = sgpr_optimal_q(Kj, Kxx, small.y, noise);
    const MatrixXd Xs = VectorXd::LinSpaced(21, -2.0, 2.0);
    const Predictive s = svgp_predict(q, Kj, kernel_matrix(k, Xs, small.X), kernel_diag(k, Xs));
    const Predictive e = gp_predict(k, noise, small, Xs);
    worst_exact = std::max({worst_exact, max_abs(s.mean - e.mean), max_abs(s.variance - e.variance)});
  }
  report(4, worst_bound <= 1e-8 && worst_elbo <= 1e-8 && worst_exact <= 1e-6,
         fmt("50 instances: max(bound - LML) %.2e (<=1e-8), max |ELBO(q*) - bound| %.2e (<=1e-8), Z=X vs exact GP %.2e "
             "(<=1e-6)",
             worst_bound, worst_elbo, worst_exact));
}

struct ForgettingRun {
  double oh_t1 = 0, oh_t10 = 0, os_t1 = 0, os_t10 = 0;
  double oh_ms = 0;
  int oh_opt_iters = 0;
  long oh_wall_ms = 0;
};

ForgettingRun forgetting_run(std::uint64_t seed, int rff_samples) {
  const std::string base = "synth_kind = sine-drift\nsynth_n = 2000\nn_tasks = 10\nM = 50\nrff_samples = " +
                           std::to_string(rff_samples) + "\nseed = " + std::to_string(seed) + "\n";
  const MetricsReport oh = run_experiment(parse_config(base + "method = ohsgpr\n"));
  const MetricsReport os = run_experiment(parse_config(base + "method = osgpr-resamplez\n"));
  ForgettingRun r;
  r.oh_t1 = oh.rmse_at(1, 1);
  r.oh_t10 = oh.rmse_at(10, 1);
  r.os_t1 = os.rmse_at(1, 1);
  r.os_t10 = os.rmse_at(10, 1);
  r.oh_ms = oh.total_ms;
  r.oh_opt_iters = oh.optimizer_iterations_after_task1;
  r.oh_wall_ms = oh.rows.back().wall_ms;
  return r;
}

bool forgetting_holds(const ForgettingRun& r) {
  return r.oh_t10 < r.os_t10 && r.os_t10 >= 1.5 * r.os_t1 && r.oh_t10 <= 1.2 * r.oh_t1;
}

std::vector<ForgettingRun> criterion5() {
  const auto t0 = Clock::now();
  std::vector<ForgettingRun> runs;
  int ok = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    runs.push_back(forgetting_run(seed, 10000));
    const ForgettingRun& r = runs.back();
    ok += forgetting_holds(r);
    detail += fmt(" [seed %d: OHSGPR %.3f->%.3f (%+.0f%%), OSGPR %.3f->%.3f (%+.0f%%)%s]", static_cast<int>(seed), r.oh_t1,
                  r.oh_t10, 100 * (r.oh_t10 / r.oh_t1 - 1), r.os_t1, r.os_t10, 100 * (r.os_t10 / r.os_t1 - 1),
                  forgetting_holds(r) ? "" : " x");
  }
  const double secs = seconds_since(t0);
  report(5, ok >= 4 && secs < 60.0,
         fmt("%d/5 seeds (>=4), rff_samples=10000, %.1fs (<60s);", ok, secs) + detail);

  // Informational: the same protocol at the default feature count.
  int ok_default = 0;
  std::string d2;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ForgettingRun r = forgetting_run(seed, 1000);
    ok_default += forgetting_holds(r);
    d2 += fmt(" %+.0f%%", 100 * (r.oh_t10 / r.oh_t1 - 1));
  }
  std::printf("  info: rff_samples=1000 holds in %d/5 seeds; OHSGPR task-1 degradation by seed:%s\n", ok_default,
              d2.c_str());
  return runs;
}

void criterion6() {
  int ok = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto t1_rmse = [&](const std::string& basis) {
      const std::string cfg = "synth_kind = sine-drift\nsynth_n = 600\nsynth_span = 30\nn_tasks = 3\nscheme = bilinear\n"
                              "rff_samples = 10000\nrecord_timing = false\nmethod = ohsgpr\nbasis = " +
                              basis + "\nseed = " + std::to_string(seed) + "\n";
      return run_experiment(parse_config(cfg)).rmse_at(3, 1);
    };
    const double legs = t1_rmse("legs"), legt = t1_rmse("legt"), lagt = t1_rmse("lagt");
    const bool holds = legs < legt && legs < lagt;
    ok += holds;
    detail += fmt(" [seed %d: LegS %.3f LegT %.3f LagT %.3f%s]", static_cast<int>(seed), legs, legt, lagt, holds ? "" : " x");
  }
  report(6, ok >= 4, fmt("%d/5 seeds (>=4), task-1 RMSE after task 3;", ok) + detail);
}

void criterion7(const std::vector<ForgettingRun>& runs) {
  bool pass = true;
  std::string detail;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const ForgettingRun& r = runs[i];
    pass = pass && r.oh_opt_iters == 0 && r.oh_ms <= 10000.0 && r.oh_wall_ms > 0;
    detail += fmt(" [seed %zu: %.0f ms, wall_ms %ld, optimizer iterations after task 1: %d]", i, r.oh_ms, r.oh_wall_ms,
                  r.oh_opt_iters);
  }
  report(7, pass, "OHSGPR total wall <= 10000 ms, no optimization after task 1;" + detail);
}

void criterion8() {
  const OracleReport r = oracle_check(parse_config("seed = 0\n"));
  bool found = false;
  std::string detail;
  for (const OracleRow& row : r.rows) {
    if (!row.recorded_only) continue;
    found = found || row.pass;
    detail += fmt(" [%s: direct %.4f vs rff %.4f]", row.name.c_str(), row.value, row.threshold);
  }
  report(8, found && r.all_passed(), "direct-ODE K_uu error exceeds RFF-path error at a matched coarse dt;" + detail);
}

void criterion9() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DataBatch d = generate_synthetic("two-cluster-2d", 40, 0.1, 3);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd ls = (VectorXd(2) << std::exp(u(rng)), std::exp(u(rng))).finished();
    const Kernel k = trial % 2 ? Kernel::matern52(std::exp(u(rng)), ls) : Kernel::ard_rbf(std::exp(u(rng)), ls);
    const NoiseModel noise(std::exp(u(rng) - 2.0));
    const VectorXd g = lml_log_gradient(k, noise, d);
    const double h = 1e-5;
    for (int p = 0; p < 4; ++p) {
      Kernel kp = k, km = k;
      double np = noise.variance(), nm = noise.variance();
      if (p == 0) {
        kp.output_scale_sq *= std::exp(h);
        km.output_scale_sq *= std::exp(-h);
      } else if (p < 3) {
        kp.lengthscales[p - 1] *= std::exp(h);
        km.lengthscales[p - 1] *= std::exp(-h);
      } else {
        np *= std::exp(h);
        nm *= std::exp(-h);
      }
      const double fd = (log_marginal_likelihood(kp, NoiseModel(np), d) - log_marginal_likelihood(km, NoiseModel(nm), d)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[p]) / std::max(1.0, std::abs(fd)));
    }
  }

  // Every q along every method's stream must factorize.
  int checked = 0, bad = 0;
  const DataBatch series = sine_series(1000, 1);
  const TaskStream st = split_stream(series, 10);
  const Kernel k = Kernel::ard_rbf(1.0, 0.1);
  for (const OnlineMethod m : {OnlineMethod::kOhsgpr, OnlineMethod::kOsgprFixedZ, OnlineMethod::kOsgprResampleZ, OnlineMethod::kOvc}) {
    OnlineOptions o;
    o.method = m;
    o.num_inducing = 30;
    o.fixed_z = VectorXd::LinSpaced(30, 0.0, 1.0);
    OnlineModelState s = make_online_state(o, k, NoiseModel(0.04));
    for (std::size_t i = 0; i < st.tasks.size(); ++i) {
      s = online_update(s, st.tasks[i], st.boundaries[i]);
      ++checked;
      const MatrixXd cov = current_q(s).covariance();
      const Eigen::LLT<MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success || !cov.allFinite()) ++bad;
    }
  }
  report(9, worst <= 1e-4 && bad == 0,
         fmt("LML gradient max rel error %.2e over 20 points (<=1e-4); q covariance Cholesky ok on %d/%d updates", worst,
             checked - bad, checked));
}

void guarded(int id, const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(id, false, std::string("threw: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, criterion3);
  guarded(4, criterion4);
  std::vector<ForgettingRun> runs;
  guarded(5, [&] { runs = criterion5(); });
  guarded(6, criterion6);
  if (runs.empty()) {
    report(7, false, "criterion 5 runs unavailable");
  } else {
    guarded(7, [&] { criterion7(runs); });
  }
  guarded(8, criterion8);
  guarded(9, criterion9);
  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
