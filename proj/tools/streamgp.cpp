#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "streamgp/bench.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw streamgp::UsageError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

streamgp::ExperimentConfig config_from(const std::string& path, std::optional<std::uint64_t> seed,
                                       const std::string& out) {
  const std::string text = read_file(path);
  if (streamgp::count_config_keys(text) == 0) throw streamgp::UsageError("config '" + path + "' sets no keys");
  streamgp::ExperimentConfig c = streamgp::parse_config(text);
  if (seed) {
    c.seed = *seed;
    if (c.ordering.kind == streamgp::OrderingKind::kRandom) c.ordering.seed = *seed;
  }
  if (!out.empty()) c.output = out;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streamgp: streaming sparse GP regression with HiPPO inducing variables"};
  app.fallthrough();
  app.footer("\n" + streamgp::config_help());
  app.require_subcommand(1);

  bool quiet = false;
  std::optional<std::uint64_t> seed;
  std::string out;
  app.add_flag("--quiet", quiet, "Suppress the metrics table");
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out, "Override the output path");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a streaming experiment and write the metrics CSV");
  run->add_option("config", config_path, "Config file")->required();

  std::string kind;
  long n = 0;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  double noise = 0.2;
  double span = 1.0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset as CSV");
  synth->add_option("kind", kind, "sine-drift | piecewise | two-cluster-2d")->required();
  synth->add_option("n", n, "Number of points")->required();
  synth->add_option("seed", synth_seed, "Random seed")->required();
  synth->add_option("out", synth_out, "Output CSV")->required();
  synth->add_option("--noise", noise, "Noise standard deviation");
  synth->add_option("--span", span, "Time span of the time-series generators");

  auto* oracle = app.add_subcommand("oracle-check", "Check the recurrences against quadrature and batch references");
  oracle->add_option("config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      const streamgp::ExperimentConfig c = config_from(config_path, seed, out);
      const streamgp::MetricsReport report = streamgp::run_experiment(c);
      if (!quiet) {
        if (c.output.empty()) {
          streamgp::write_report_csv(report, std::cout);
        } else {
          std::cout << "wrote " << report.rows.size() << " rows to " << c.output << "\n";
        }
        std::cerr << "lengthscale=" << report.kernel.lengthscales.transpose()
                  << " outputscale=" << report.kernel.output_scale_sq << " noise=" << report.noise.variance()
                  << " total_ms=" << report.total_ms << "\n";
      }
    } else if (*synth) {
      const streamgp::DataBatch d = streamgp::generate_synthetic(kind, n, noise, seed.value_or(synth_seed), span);
      const auto mode = kind == "two-cluster-2d" ? streamgp::DataMode::kMultidim : streamgp::DataMode::kTimeSeries;
      streamgp::write_csv(d, out.empty() ? synth_out : out, mode);
    } else if (*oracle) {
      const streamgp::ExperimentConfig c = config_from(config_path, seed, out);
      const streamgp::OracleReport report = streamgp::oracle_check(c);
      if (!quiet) streamgp::print_oracle_report(report, std::cout);
      if (!report.all_passed()) return 2;
    }
  } catch (const streamgp::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const streamgp::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const streamgp::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
