#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "streamgp/errors.hpp"
#include "streamgp/gp_core.hpp"
#include "streamgp/hippo.hpp"
#include "streamgp/kernels.hpp"
#include "streamgp/multidim.hpp"
#include "streamgp/online.hpp"

namespace streamgp {

/// Bad command line or config; the CLI maps it to exit code 1.
class UsageError : public InputError {
 public:
  using InputError::InputError;
};

enum class DataMode { kTimeSeries, kMultidim };

enum class ExperimentMethod { kOhsgpr, kOsgprFixedZ, kOsgprResampleZ, kOvc, kExactGp, kSgprBatch };

const char* to_string(ExperimentMethod method);

struct ExperimentConfig {
  std::string dataset;  // CSV path; empty means synthetic
  DataMode mode = DataMode::kTimeSeries;
  std::string synth_kind = "sine-drift";
  long synth_n = 2000;
  double synth_noise = 0.2;
  double synth_span = 1.0;

  ExperimentMethod method = ExperimentMethod::kOhsgpr;
  KernelKind kernel = KernelKind::kArdRbf;
  int M = 50;
  BasisKind basis = BasisKind::kLegS;
  double theta = 0.0;  // LegT/FouT window; 0 means one task span
  double dt = 0.0;     // 0 means the mode default
  Scheme scheme = Scheme::kForwardEuler;
  int rff_samples = 1000;
  int n_tasks = 10;
  OrderingStrategy ordering = OrderingStrategy::by_dimension(0);
  int stride = 1;
  std::uint64_t seed = 0;
  std::string output;

  int fit_iters = 100;
  double init_lengthscale = 0.0;  // 0 means a data-driven default
  double init_outputscale = 0.0;
  double init_noise = 0.0;
  bool record_timing = true;
  bool compute_ece = false;

  // oracle-check thresholds and settings
  double coef_tol = 1e-2;
  double kfu_tol = 1e-2;
  double kuu_tol = 0.1;
  double stream_tol = 1e-6;
  double oracle_dt = 1e-3;
  int oracle_M = 8;
  double oracle_lengthscale = 0.5;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, bad values
/// and duplicate keys raise UsageError naming the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Number of keys set in `text` (0 for blank/comment-only input).
int count_config_keys(const std::string& text);
/// Documented keys with defaults, for --help.
std::string config_help();

DataBatch load_csv(const std::string& path, DataMode mode);
DataBatch read_csv(std::istream& in, DataMode mode, const std::string& name = "<stream>");
void write_csv(const DataBatch& data, const std::string& path, DataMode mode);
void write_csv(const DataBatch& data, std::ostream& out, DataMode mode);

/// sine-drift (t in (0, span]), piecewise (t in (0, span]) or two-cluster-2d.
DataBatch generate_synthetic(const std::string& kind, long n, double noise_sd, std::uint64_t seed,
                             double span = 1.0);
/// Noise-free target for the time-series generators at t.
double synthetic_function(const std::string& kind, double t, double span = 1.0);

struct MetricsRow {
  int task_learned = 0;  // 1-based
  int task_eval = 0;
  double rmse = 0.0;
  double nlpd = 0.0;
  std::optional<double> ece;
  long wall_ms = 0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  Kernel kernel;
  NoiseModel noise;
  double total_ms = 0.0;  // fitting + model updates
  int optimizer_iterations_after_task1 = 0;

  /// rmse of task_eval after task_learned; throws StateError when absent.
  double rmse_at(int task_learned, int task_eval) const;
};

void write_report_csv(const MetricsReport& report, std::ostream& out);
void write_report_csv(const MetricsReport& report, const std::string& path);

/// Loads or generates the data, fits hyperparameters on task 1, freezes them
/// and streams the remaining tasks. Writes the CSV when config.output is set;
/// on a numerical failure the rows collected so far are written first.
MetricsReport run_experiment(const ExperimentConfig& config);

struct OracleRow {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = true;
  bool recorded_only = false;  // informational; does not affect the exit status
};

struct OracleReport {
  std::vector<OracleRow> rows;
  bool all_passed() const;
};

OracleReport oracle_check(const ExperimentConfig& config);
void print_oracle_report(const OracleReport& report, std::ostream& out);

}  // namespace streamgp
