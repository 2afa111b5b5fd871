#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "streamgp/bench.hpp"

namespace streamgp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return d;
}

long to_long(const std::string& v) {
  std::size_t pos = 0;
  const long x = std::stol(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

int to_positive_int(const std::string& v) {
  const long x = to_long(v);
  if (x < 1 || x > 1000000000L) throw std::invalid_argument("must be a positive integer");
  return static_cast<int>(x);
}

double to_positive(const std::string& v) {
  const double d = to_double(v);
  if (!(d > 0.0)) throw std::invalid_argument("must be positive");
  return d;
}

double to_non_negative(const std::string& v) {
  const double d = to_double(v);
  if (!(d >= 0.0)) throw std::invalid_argument("must be >= 0");
  return d;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected true/false");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

struct KeyInfo {
  const char* name;
  const char* help;
  Setter set;
};

const std::vector<KeyInfo>& keys() {
  static const std::vector<KeyInfo> table = {
      {"dataset", "CSV file (t,y or x1..xd,y); empty = synthetic", [](ExperimentConfig& c, const std::string& v) { c.dataset = v; }},
      {"mode", "timeseries | multidim (default timeseries)",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "timeseries") c.mode = DataMode::kTimeSeries;
         else if (v == "multidim") c.mode = DataMode::kMultidim;
         else throw std::invalid_argument("expected timeseries or multidim");
       }},
      {"synth_kind", "sine-drift | piecewise | two-cluster-2d", [](ExperimentConfig& c, const std::string& v) {
         if (v != "sine-drift" && v != "piecewise" && v != "two-cluster-2d") throw std::invalid_argument("unknown generator");
         c.synth_kind = v;
       }},
      {"synth_n", "synthetic point count (2000)", [](ExperimentConfig& c, const std::string& v) { c.synth_n = to_positive_int(v); }},
      {"synth_noise", "synthetic noise sd (0.2)", [](ExperimentConfig& c, const std::string& v) { c.synth_noise = to_non_negative(v); }},
      {"synth_span", "time span of the time-series generators (1)", [](ExperimentConfig& c, const std::string& v) { c.synth_span = to_positive(v); }},
      {"method", "ohsgpr | osgpr-fixedz | osgpr-resamplez | ovc | exact-gp | sgpr-batch",
       [](ExperimentConfig& c, const std::string& v) {
         static const std::map<std::string, ExperimentMethod> m = {
             {"ohsgpr", ExperimentMethod::kOhsgpr},         {"osgpr-fixedz", ExperimentMethod::kOsgprFixedZ},
             {"osgpr-resamplez", ExperimentMethod::kOsgprResampleZ}, {"ovc", ExperimentMethod::kOvc},
             {"exact-gp", ExperimentMethod::kExactGp},      {"sgpr-batch", ExperimentMethod::kSgprBatch}};
         const auto it = m.find(v);
         if (it == m.end()) throw std::invalid_argument("unknown method");
         c.method = it->second;
       }},
      {"kernel", "rbf | matern52", [](ExperimentConfig& c, const std::string& v) {
         if (v == "rbf") c.kernel = KernelKind::kArdRbf;
         else if (v == "matern52") c.kernel = KernelKind::kMatern52;
         else throw std::invalid_argument("expected rbf or matern52");
       }},
      {"M", "inducing variables / HiPPO order (50)", [](ExperimentConfig& c, const std::string& v) { c.M = to_positive_int(v); }},
      {"basis", "legs | legt | lagt | fout", [](ExperimentConfig& c, const std::string& v) {
         static const std::map<std::string, BasisKind> m = {
             {"legs", BasisKind::kLegS}, {"legt", BasisKind::kLegT}, {"lagt", BasisKind::kLagT}, {"fout", BasisKind::kFouT}};
         const auto it = m.find(v);
         if (it == m.end()) throw std::invalid_argument("unknown basis");
         c.basis = it->second;
       }},
      {"theta", "LegT/FouT window (0 = one task span)", [](ExperimentConfig& c, const std::string& v) { c.theta = to_non_negative(v); }},
      {"dt", "recurrence step (0 = task-1 span / 1000, or 1/n in multidim)", [](ExperimentConfig& c, const std::string& v) { c.dt = to_non_negative(v); }},
      {"scheme", "euler | bilinear", [](ExperimentConfig& c, const std::string& v) {
         if (v == "euler") c.scheme = Scheme::kForwardEuler;
         else if (v == "bilinear") c.scheme = Scheme::kBilinear;
         else throw std::invalid_argument("expected euler or bilinear");
       }},
      {"rff_samples", "random Fourier feature count (1000)", [](ExperimentConfig& c, const std::string& v) { c.rff_samples = to_positive_int(v); }},
      {"n_tasks", "number of sequential tasks (10)", [](ExperimentConfig& c, const std::string& v) { c.n_tasks = to_positive_int(v); }},
      {"ordering", "multidim ordering: dim | l2 | kmax | kmin | random", [](ExperimentConfig& c, const std::string& v) {
         const int d = c.ordering.dimension;
         if (v == "dim") c.ordering = OrderingStrategy::by_dimension(d);
         else if (v == "l2") c.ordering = OrderingStrategy::by_l2();
         else if (v == "kmax") c.ordering = OrderingStrategy::k_max();
         else if (v == "kmin") c.ordering = OrderingStrategy::k_min();
         else if (v == "random") c.ordering = OrderingStrategy::random(0);
         else throw std::invalid_argument("unknown ordering");
         c.ordering.dimension = d;
       }},
      {"ordering_dim", "dimension used by ordering = dim (0)", [](ExperimentConfig& c, const std::string& v) {
         const long d = to_long(v);
         if (d < 0) throw std::invalid_argument("must be >= 0");
         c.ordering.dimension = static_cast<int>(d);
       }},
      {"stride", "multidim recurrence stride (1)", [](ExperimentConfig& c, const std::string& v) { c.stride = to_positive_int(v); }},
      {"seed", "random seed (0)", [](ExperimentConfig& c, const std::string& v) {
         const long s = to_long(v);
         if (s < 0) throw std::invalid_argument("must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"output", "CSV report path", [](ExperimentConfig& c, const std::string& v) { c.output = v; }},
      {"fit_iters", "BFGS iterations on task 1 (100; 0 keeps the initial values)", [](ExperimentConfig& c, const std::string& v) {
         const long n = to_long(v);
         if (n < 0) throw std::invalid_argument("must be >= 0");
         c.fit_iters = static_cast<int>(n);
       }},
      {"init_lengthscale", "initial lengthscale (0 = auto)", [](ExperimentConfig& c, const std::string& v) { c.init_lengthscale = to_non_negative(v); }},
      {"init_outputscale", "initial output scale sigma_f^2 (0 = auto)", [](ExperimentConfig& c, const std::string& v) { c.init_outputscale = to_non_negative(v); }},
      {"init_noise", "initial noise variance (0 = auto)", [](ExperimentConfig& c, const std::string& v) { c.init_noise = to_non_negative(v); }},
      {"record_timing", "write measured wall_ms (true); false writes 0", [](ExperimentConfig& c, const std::string& v) { c.record_timing = to_bool(v); }},
      {"compute_ece", "also compute ECE (report only, false)", [](ExperimentConfig& c, const std::string& v) { c.compute_ece = to_bool(v); }},
      {"coef_tol", "oracle: coefficient inf-norm tolerance (1e-2)", [](ExperimentConfig& c, const std::string& v) { c.coef_tol = to_positive(v); }},
      {"kfu_tol", "oracle: K_fu inf-norm tolerance (1e-2)", [](ExperimentConfig& c, const std::string& v) { c.kfu_tol = to_positive(v); }},
      {"kuu_tol", "oracle: K_uu relative Frobenius tolerance (0.1)", [](ExperimentConfig& c, const std::string& v) { c.kuu_tol = to_positive(v); }},
      {"stream_tol", "oracle: streaming vs batch tolerance (1e-6)", [](ExperimentConfig& c, const std::string& v) { c.stream_tol = to_positive(v); }},
      {"oracle_dt", "oracle: recurrence step (1e-3)", [](ExperimentConfig& c, const std::string& v) { c.oracle_dt = to_positive(v); }},
      {"oracle_M", "oracle: basis order (8)", [](ExperimentConfig& c, const std::string& v) { c.oracle_M = to_positive_int(v); }},
      {"oracle_lengthscale", "oracle: kernel lengthscale (0.5)", [](ExperimentConfig& c, const std::string& v) { c.oracle_lengthscale = to_positive(v); }},
  };
  return table;
}

template <typename F>
void for_each_entry(const std::string& text, F&& f) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    f(lineno, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  // ordering_dim must be known before ordering = dim is applied; apply it first.
  for_each_entry(text, [&](int lineno, const std::string& key, const std::string& value) {
    if (key == "ordering_dim") {
      try {
        const long d = to_long(value);
        if (d < 0) throw std::invalid_argument("must be >= 0");
        c.ordering.dimension = static_cast<int>(d);
      } catch (const std::exception& e) {
        throw UsageError("config line " + std::to_string(lineno) + ": bad value for ordering_dim: " + e.what());
      }
    }
  });
  for_each_entry(text, [&](int lineno, const std::string& key, const std::string& value) {
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const KeyInfo& k) { return key == k.name; });
    if (it == table.end()) throw UsageError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw UsageError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    try {
      it->set(c, value);
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError("config line " + std::to_string(lineno) + ": bad value for " + key + ": " + e.what());
    }
  });
  if (c.ordering.kind == OrderingKind::kRandom) c.ordering.seed = c.seed;
  return c;
}

int count_config_keys(const std::string& text) {
  int n = 0;
  for_each_entry(text, [&](int, const std::string&, const std::string&) { ++n; });
  return n;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_help() {
  std::ostringstream out;
  out << "Config keys (key = value, '#' comments):\n";
  for (const auto& k : keys()) {
    const std::string name = k.name;
    out << "  " << name << std::string(name.size() < 20 ? 20 - name.size() : 1, ' ') << k.help << "\n";
  }
  return out.str();
}

const char* to_string(ExperimentMethod method) {
  switch (method) {
    case ExperimentMethod::kOhsgpr:
      return "ohsgpr";
    case ExperimentMethod::kOsgprFixedZ:
      return "osgpr-fixedz";
    case ExperimentMethod::kOsgprResampleZ:
      return "osgpr-resamplez";
    case ExperimentMethod::kOvc:
      return "ovc";
    case ExperimentMethod::kExactGp:
      return "exact-gp";
    case ExperimentMethod::kSgprBatch:
      return "sgpr-batch";
  }
  return "unknown";
}

}  // namespace streamgp
