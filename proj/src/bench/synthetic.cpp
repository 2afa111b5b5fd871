#include <cmath>
#include <numbers>
#include <random>

#include "streamgp/bench.hpp"

namespace streamgp {

namespace {

// f(s) = 3 + 2s cycles per unit, s = t / span.
double sine_drift(double s) { return std::sin(2.0 * std::numbers::pi * (3.0 + 2.0 * s) * s); }

double piecewise(double s) {
  if (s < 1.0 / 3.0) return std::sin(6.0 * std::numbers::pi * s);
  if (s < 2.0 / 3.0) return 0.8 - 1.2 * (s - 1.0 / 3.0);
  return 0.5 * std::cos(8.0 * std::numbers::pi * s);
}

}  // namespace

double synthetic_function(const std::string& kind, double t, double span) {
  if (!(span > 0.0)) throw InputError("synthetic: span must be positive");
  const double s = t / span;
  if (kind == "sine-drift") return sine_drift(s);
  if (kind == "piecewise") return piecewise(s);
  throw InputError("synthetic_function: unknown time-series generator '" + kind + "'");
}

DataBatch generate_synthetic(const std::string& kind, long n, double noise_sd, std::uint64_t seed, double span) {
  if (n < 1) throw InputError("generate_synthetic: n must be >= 1");
  if (!(noise_sd >= 0.0)) throw InputError("generate_synthetic: noise_sd must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DataBatch out;
  out.y.resize(n);
  if (kind == "sine-drift" || kind == "piecewise") {
    out.X.resize(n, 1);
    for (long i = 0; i < n; ++i) {
      const double t = span * static_cast<double>(i + 1) / static_cast<double>(n);
      out.X(i, 0) = t;
      out.y[i] = synthetic_function(kind, t, span) + noise_sd * normal(rng);
    }
    return out;
  }
  if (kind == "two-cluster-2d") {
    // First half around (-2,-2), second half around (2,2).
    out.X.resize(n, 2);
    const long first = (n + 1) / 2;
    for (long i = 0; i < n; ++i) {
      const double c = i < first ? -2.0 : 2.0;
      out.X(i, 0) = c + 0.5 * normal(rng);
      out.X(i, 1) = c + 0.5 * normal(rng);
    }
    for (long i = 0; i < n; ++i) {
      out.y[i] = std::sin(out.X(i, 0)) + std::cos(out.X(i, 1)) + noise_sd * normal(rng);
    }
    return out;
  }
  throw InputError("generate_synthetic: unknown kind '" + kind + "'");
}

}  // namespace streamgp
