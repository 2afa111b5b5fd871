#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "streamgp/bench.hpp"

using namespace streamgp;

namespace {

std::string report_text(const MetricsReport& r) {
  std::ostringstream os;
  write_report_csv(r, os);
  return os.str();
}

::testing::AssertionResult throws_mentioning(const std::function<void()>& f, const std::string& needle) {
  try {
    f();
  } catch (const InputError& e) {
    if (std::string(e.what()).find(needle) != std::string::npos) return ::testing::AssertionSuccess();
    return ::testing::AssertionFailure() << "message '" << e.what() << "' lacks '" << needle << "'";
  }
  return ::testing::AssertionFailure() << "no InputError thrown";
}

DataBatch csv(const std::string& text, DataMode mode) {
  std::istringstream in(text);
  return read_csv(in, mode, "test.csv");
}

}  // namespace

TEST(Config, ParsesKeysAndComments) {
  const ExperimentConfig c = parse_config(
      "# a comment\n\nmethod = ovc  # trailing\nM = 12\nbasis = legt\ntheta = 0.3\nscheme = bilinear\nseed = 9\n");
  EXPECT_EQ(c.method, ExperimentMethod::kOvc);
  EXPECT_EQ(c.M, 12);
  EXPECT_EQ(c.basis, BasisKind::kLegT);
  EXPECT_DOUBLE_EQ(c.theta, 0.3);
  EXPECT_EQ(c.scheme, Scheme::kBilinear);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.rff_samples, 1000);
  EXPECT_EQ(c.n_tasks, 10);
  EXPECT_EQ(count_config_keys("# nothing\n\n"), 0);
  EXPECT_EQ(count_config_keys("M = 3\nseed = 1\n"), 2);
}

TEST(Config, RejectsUnknownDuplicateAndBadValues) {
  EXPECT_TRUE(throws_mentioning([] { parse_config("M = 4\nlearning_rate = 0.1\n"); }, "line 2"));
  EXPECT_TRUE(throws_mentioning([] { parse_config("M = 4\nM = 5\n"); }, "line 2"));
  EXPECT_TRUE(throws_mentioning([] { parse_config("M = -3\n"); }, "line 1"));
  EXPECT_TRUE(throws_mentioning([] { parse_config("method = magic\n"); }, "line 1"));
  EXPECT_TRUE(throws_mentioning([] { parse_config("just words\n"); }, "line 1"));
  EXPECT_THROW(parse_config("n_tasks = 0\n"), UsageError);
}

TEST(Config, HelpListsEveryKey) {
  const std::string help = config_help();
  for (const char* key : {"dataset", "method", "M", "basis", "dt", "scheme", "rff_samples", "n_tasks", "ordering", "seed",
                          "output"}) {
    EXPECT_NE(help.find(key), std::string::npos) << key;
  }
}

TEST(Csv, WellFormedTimeSeries) {
  const DataBatch b = csv("t,y\n0.1,1.0\n0.2,-2.5\n\n0.3,3e-2\n", DataMode::kTimeSeries);
  ASSERT_EQ(b.size(), 3);
  EXPECT_DOUBLE_EQ(b.X(2, 0), 0.3);
  EXPECT_DOUBLE_EQ(b.y[1], -2.5);
}

TEST(Csv, UnsortedTimeNamesLine) {
  EXPECT_TRUE(throws_mentioning([] { csv("t,y\n0.1,1\n0.3,2\n0.2,3\n", DataMode::kTimeSeries); }, "line 4"));
}

TEST(Csv, ParseErrorsNameLine) {
  EXPECT_TRUE(throws_mentioning([] { csv("t,y\n0.1,1\n0.2,abc\n", DataMode::kTimeSeries); }, "line 3"));
  EXPECT_TRUE(throws_mentioning([] { csv("t,y\n0.1,nan\n", DataMode::kTimeSeries); }, "line 2"));
  EXPECT_TRUE(throws_mentioning([] { csv("t,y\n0.1,1,7\n", DataMode::kTimeSeries); }, "line 2"));
  EXPECT_THROW(csv("time,value\n0.1,1\n", DataMode::kTimeSeries), InputError);
  EXPECT_THROW(csv("x1,x3,y\n0.1,1,2\n", DataMode::kMultidim), InputError);
}

TEST(Csv, RoundTripIsBitExact) {
  for (const std::string kind : {"sine-drift", "two-cluster-2d"}) {
    const DataMode mode = kind == "sine-drift" ? DataMode::kTimeSeries : DataMode::kMultidim;
    const DataBatch d = generate_synthetic(kind, 257, 0.3, 4);
    std::stringstream ss;
    write_csv(d, ss, mode);
    const DataBatch back = read_csv(ss, mode);
    EXPECT_EQ(back.X, d.X) << kind;
    EXPECT_EQ(back.y, d.y) << kind;
  }
}

TEST(Synthetic, Deterministic) {
  for (const std::string kind : {"sine-drift", "piecewise", "two-cluster-2d"}) {
    const DataBatch a = generate_synthetic(kind, 300, 0.2, 11);
    const DataBatch b = generate_synthetic(kind, 300, 0.2, 11);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.y, b.y);
    EXPECT_NE(a.y, generate_synthetic(kind, 300, 0.2, 12).y);
  }
  EXPECT_THROW(generate_synthetic("spiral", 10, 0.1, 0), InputError);
  EXPECT_THROW(generate_synthetic("sine-drift", 0, 0.1, 0), InputError);
}

TEST(Synthetic, NoiselessMatchesFunction) {
  for (const std::string kind : {"sine-drift", "piecewise"}) {
    const DataBatch d = generate_synthetic(kind, 500, 0.0, 3, 2.0);
    for (Eigen::Index i = 0; i < d.size(); ++i) EXPECT_EQ(d.y[i], synthetic_function(kind, d.X(i, 0), 2.0));
    EXPECT_GT(d.X(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(d.X(d.size() - 1, 0), 2.0);
  }
}

TEST(Synthetic, NoiseVariance) {
  const double sd = 0.3;
  const DataBatch d = generate_synthetic("sine-drift", 10000, sd, 5);
  double s = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double e = d.y[i] - synthetic_function("sine-drift", d.X(i, 0));
    s += e * e;
  }
  const double var = s / static_cast<double>(d.size());
  EXPECT_NEAR(var, sd * sd, 0.1 * sd * sd);
}

TEST(Experiment, SingleTaskExactGp) {
  const MetricsReport r = run_experiment(parse_config("method = exact-gp\nn_tasks = 1\nsynth_n = 200\nrecord_timing = false\n"));
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].task_learned, 1);
  EXPECT_TRUE(std::isfinite(r.rows[0].nlpd));
  EXPECT_EQ(r.rows[0].wall_ms, 0);
  EXPECT_THROW(r.rmse_at(2, 1), StateError);
}

TEST(Experiment, RowLayout) {
  const MetricsReport r = run_experiment(parse_config("method = ohsgpr\nn_tasks = 3\nsynth_n = 300\nM = 10\n"));
  ASSERT_EQ(r.rows.size(), 6u);
  int i = 0;
  for (int learned = 1; learned <= 3; ++learned)
    for (int eval = 1; eval <= learned; ++eval, ++i) {
      EXPECT_EQ(r.rows[i].task_learned, learned);
      EXPECT_EQ(r.rows[i].task_eval, eval);
      EXPECT_GE(r.rows[i].rmse, 0.0);
    }
  EXPECT_EQ(r.optimizer_iterations_after_task1, 0);
  EXPECT_EQ(report_text(r).substr(0, report_text(r).find('\n')), "task_learned,task_eval,rmse,nlpd,wall_ms");
}

TEST(Experiment, FixedZMatchesBatchSgpr) {
  const std::string base = "synth_n = 500\nn_tasks = 5\nM = 20\nrecord_timing = false\nseed = 2\n";
  const MetricsReport a = run_experiment(parse_config(base + "method = osgpr-fixedz\n"));
  const MetricsReport b = run_experiment(parse_config(base + "method = sgpr-batch\n"));
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_NEAR(a.rows[i].rmse, b.rows[i].rmse, 1e-5);
    EXPECT_NEAR(a.rows[i].nlpd, b.rows[i].nlpd, 1e-5);
  }
}

TEST(Experiment, DeterministicBytes) {
  const std::string cfg = "method = ohsgpr\nn_tasks = 4\nsynth_n = 400\nM = 12\nseed = 7\nrecord_timing = false\n";
  EXPECT_EQ(report_text(run_experiment(parse_config(cfg))), report_text(run_experiment(parse_config(cfg))));
}

TEST(Experiment, TooFewPointsRejected) {
  EXPECT_THROW(run_experiment(parse_config("synth_n = 20\nn_tasks = 10\n")), InputError);
}

TEST(Experiment, EceReportedWhenRequested) {
  const MetricsReport r =
      run_experiment(parse_config("method = ohsgpr\nn_tasks = 2\nsynth_n = 200\nM = 8\ncompute_ece = true\n"));
  for (const MetricsRow& row : r.rows) {
    ASSERT_TRUE(row.ece.has_value());
    EXPECT_GE(*row.ece, 0.0);
    EXPECT_LE(*row.ece, 1.0);
  }
}

TEST(OracleCheck, DefaultPassesCoarseStepFails) {
  const OracleReport ok = oracle_check(parse_config("seed = 0\n"));
  EXPECT_TRUE(ok.all_passed());
  bool recorded = false;
  for (const OracleRow& row : ok.rows) recorded = recorded || row.recorded_only;
  EXPECT_TRUE(recorded);

  const OracleReport coarse = oracle_check(parse_config("oracle_dt = 0.5\n"));
  EXPECT_FALSE(coarse.all_passed());
  bool kfu_failed = false;
  for (const OracleRow& row : coarse.rows) kfu_failed = kfu_failed || (row.name.find("kfu") != std::string::npos && !row.pass);
  EXPECT_TRUE(kfu_failed);
}
