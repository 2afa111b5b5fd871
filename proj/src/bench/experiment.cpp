#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "streamgp/bench.hpp"
#include "streamgp/linalg.hpp"
#include "streamgp/metrics.hpp"

namespace streamgp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

double variance_of(const VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mu = v.mean();
  return (v.array() - mu).square().sum() / static_cast<double>(v.size() - 1);
}

struct Split {
  DataBatch train;
  DataBatch test;
};

// Every 5th point of a task is held out.
Split split_task(const DataBatch& task) {
  std::vector<Eigen::Index> tr, te;
  for (Eigen::Index i = 0; i < task.size(); ++i) (i % 5 == 4 ? te : tr).push_back(i);
  return {task.subset(tr), task.subset(te)};
}

DataBatch load_data(const ExperimentConfig& c, DataMode& mode) {
  mode = c.mode;
  if (!c.dataset.empty()) return load_csv(c.dataset, c.mode);
  if (c.synth_kind == "two-cluster-2d") mode = DataMode::kMultidim;
  DataBatch d = generate_synthetic(c.synth_kind, c.synth_n, c.synth_noise, c.seed, c.synth_span);
  return d;
}

Kernel initial_kernel(const ExperimentConfig& c, const DataBatch& train) {
  const int d = train.input_dim();
  VectorXd ls(d);
  for (int j = 0; j < d; ++j) {
    const double sd = std::sqrt(variance_of(train.X.col(j)));
    ls[j] = c.init_lengthscale > 0.0 ? c.init_lengthscale : (sd > 0.0 ? sd : 1.0);
  }
  const double vy = variance_of(train.y);
  const double sf2 = c.init_outputscale > 0.0 ? c.init_outputscale : std::max(vy, 1e-6);
  return c.kernel == KernelKind::kMatern52 ? Kernel::matern52(sf2, ls) : Kernel::ard_rbf(sf2, ls);
}

MatrixXd linspace_z(const DataBatch& all, int M) {
  const double lo = all.X.col(0).minCoeff();
  const double hi = all.X.col(0).maxCoeff();
  MatrixXd z(M, 1);
  for (int i = 0; i < M; ++i) z(i, 0) = M == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (M - 1.0);
  return z;
}

// The reference methods refit nothing: they condition on the union of training data seen so far.
struct ReferenceModel {
  ExperimentMethod method;
  Kernel kernel;
  NoiseModel noise;
  MatrixXd z;
  DataBatch train;

  Predictive predict(const MatrixXd& Xs) const {
    if (train.size() == 0) {
      Predictive p;
      p.mean = VectorXd::Zero(Xs.rows());
      p.variance = kernel_diag(kernel, Xs).array() + noise.variance();
      p.includes_noise = true;
      return p;
    }
    if (method == ExperimentMethod::kExactGp) return gp_predict(kernel, noise, train, Xs, true);
    const MatrixXd kuu = add_jitter(kernel_matrix(kernel, z, z), kRelativeJitter * kernel.output_scale_sq);
    const MatrixXd kuf = kernel_matrix(kernel, z, train.X);
    const MatrixXd j = symmetrize(kuf * kuf.transpose() / noise.variance());
    const VectorXd b = kuf * train.y / noise.variance();
    return information_predict(kuu, j, b, kernel_matrix(kernel, Xs, z), kernel_diag(kernel, Xs), noise);
  }
};

OnlineMethod online_method(ExperimentMethod m) {
  switch (m) {
    case ExperimentMethod::kOhsgpr:
      return OnlineMethod::kOhsgpr;
    case ExperimentMethod::kOsgprFixedZ:
      return OnlineMethod::kOsgprFixedZ;
    case ExperimentMethod::kOsgprResampleZ:
      return OnlineMethod::kOsgprResampleZ;
    case ExperimentMethod::kOvc:
      return OnlineMethod::kOvc;
    default:
      break;
  }
  throw StateError("not an online method");
}

void write_partial(const MetricsReport& report, const ExperimentConfig& c) {
  if (!c.output.empty()) write_report_csv(report, c.output);
}

}  // namespace

double MetricsReport::rmse_at(int task_learned, int task_eval) const {
  for (const auto& r : rows) {
    if (r.task_learned == task_learned && r.task_eval == task_eval) return r.rmse;
  }
  throw StateError("rmse_at: no row for task_learned=" + std::to_string(task_learned) +
                   " task_eval=" + std::to_string(task_eval));
}

void write_report_csv(const MetricsReport& report, std::ostream& out) {
  out << "task_learned,task_eval,rmse,nlpd,wall_ms\n";
  char buf[128];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.12g,%.12g,%ld\n", r.task_learned, r.task_eval, r.rmse, r.nlpd, r.wall_ms);
    out << buf;
  }
}

void write_report_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write report '" + path + "'");
  write_report_csv(report, out);
}

MetricsReport run_experiment(const ExperimentConfig& c) {
  DataMode mode;
  DataBatch data = load_data(c, mode);
  data.validate();
  if (data.size() == 0) throw InputError("run_experiment: no data");
  if (mode == DataMode::kTimeSeries && data.input_dim() != 1) {
    throw InputError("run_experiment: time-series mode needs a single input column");
  }
  if (data.size() < 5L * c.n_tasks) {
    throw InputError("run_experiment: every task needs at least 5 points for the held-out split");
  }
  const bool multidim = mode == DataMode::kMultidim;
  const TaskStream stream = split_stream(data, c.n_tasks);
  std::vector<Split> splits;
  for (const auto& t : stream.tasks) splits.push_back(split_task(t));

  MetricsReport report;
  const auto fit_start = Clock::now();
  Kernel kernel = initial_kernel(c, splits[0].train);
  const double vy = std::max(variance_of(splits[0].train.y), 1e-6);
  NoiseModel noise(c.init_noise > 0.0 ? c.init_noise : 0.1 * vy);
  if (c.fit_iters > 0) {
    FitOptions fo;
    fo.max_iters = c.fit_iters;
    const FitResult fit = fit_hyperparameters(kernel, noise, splits[0].train, fo);
    kernel = fit.kernel;
    noise = fit.noise;
  }
  double cumulative_ms = elapsed_ms(fit_start);
  report.kernel = kernel;
  report.noise = noise;

  const long n_total = data.size();
  const double task1_span =
      multidim ? static_cast<double>(stream.tasks[0].size()) / static_cast<double>(n_total) : stream.boundaries[0];
  const double dt = c.dt > 0.0 ? c.dt : (multidim ? 1.0 / static_cast<double>(n_total) : task1_span / 1000.0);
  const double theta = c.theta > 0.0 ? c.theta : task1_span;

  BasisFamily basis = BasisFamily::legs();
  switch (c.basis) {
    case BasisKind::kLegS:
      break;
    case BasisKind::kLegT:
      basis = BasisFamily::legt(theta);
      break;
    case BasisKind::kLagT:
      basis = BasisFamily::lagt();
      break;
    case BasisKind::kFouT:
      basis = BasisFamily::fout(theta);
      break;
  }

  DataBatch all_train;
  {
    std::vector<DataBatch> parts;
    for (const auto& s : splits) parts.push_back(s.train);
    all_train = concat(parts);
  }
  MatrixXd fixed_z;
  if (c.method == ExperimentMethod::kOsgprFixedZ || c.method == ExperimentMethod::kSgprBatch) {
    fixed_z = multidim ? pivoted_cholesky_select(kernel, all_train.X, std::min<int>(c.M, static_cast<int>(all_train.size()))).points
                       : linspace_z(data, c.M);
  }

  const bool reference = c.method == ExperimentMethod::kExactGp || c.method == ExperimentMethod::kSgprBatch;
  std::optional<OnlineModelState> state;
  ReferenceModel ref{c.method, kernel, noise, fixed_z, {}};
  if (!reference) {
    OnlineOptions o;
    o.method = online_method(c.method);
    o.num_inducing = c.M;
    o.basis = basis;
    o.dt = dt;
    o.scheme = c.scheme;
    o.rff_samples = c.rff_samples;
    o.seed = c.seed;
    o.multidim = multidim;
    o.stride = c.stride;
    o.fixed_z = fixed_z;
    o.compute_elbo = false;
    state = make_online_state(o, kernel, noise);
  }

  std::optional<VectorXd> anchor;
  long counts = 0;
  std::mt19937_64 ece_rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int k = 0; k < c.n_tasks; ++k) {
    DataBatch train = splits[static_cast<std::size_t>(k)].train;
    if (multidim) {
      OrderingStrategy ord = c.ordering;
      if (ord.kind == OrderingKind::kRandom) ord.seed = c.seed + static_cast<std::uint64_t>(k);
      train = train.subset(order_points(train.X, ord, &kernel, anchor));
      if (train.size() > 0) anchor = train.X.row(train.size() - 1).transpose();
      train.timestamps = assign_pseudo_times(k, counts, train.size(), dt);
      counts += train.size();
    }
    const auto t0 = Clock::now();
    try {
      if (reference) {
        ref.train = ref.train.size() == 0 ? train : concat({ref.train, train});
      } else {
        const std::optional<double> boundary =
            multidim ? std::nullopt : std::optional<double>(stream.boundaries[static_cast<std::size_t>(k)]);
        state = online_update(*state, train, boundary);
      }
    } catch (const NumericalError&) {
      write_partial(report, c);
      throw;
    }
    cumulative_ms += elapsed_ms(t0);

    for (int e = 0; e <= k; ++e) {
      const DataBatch& test = splits[static_cast<std::size_t>(e)].test;
      Predictive p;
      try {
        p = reference ? ref.predict(test.X) : predict(*state, test.X, true);
      } catch (const NumericalError&) {
        write_partial(report, c);
        throw;
      }
      MetricsRow row;
      row.task_learned = k + 1;
      row.task_eval = e + 1;
      row.rmse = rmse(test.y, p.mean);
      row.nlpd = nlpd(p, test.y);
      if (c.compute_ece) {
        const int S = 100;
        MatrixXd samples(S, test.size());
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int s = 0; s < S; ++s) {
          for (Eigen::Index i = 0; i < test.size(); ++i) {
            samples(s, i) = p.mean[i] + std::sqrt(p.variance[i]) * normal(ece_rng);
          }
        }
        row.ece = ece(samples, test.y);
      }
      row.wall_ms = c.record_timing ? std::lround(cumulative_ms) : 0;
      report.rows.push_back(row);
    }
  }
  report.total_ms = cumulative_ms;
  report.optimizer_iterations_after_task1 = 0;
  write_partial(report, c);
  return report;
}

}  // namespace streamgp
