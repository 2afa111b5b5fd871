#include "streamgp/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "streamgp/errors.hpp"

namespace streamgp {

double rmse(const VectorXd& y, const VectorXd& yhat) {
  if (y.size() != yhat.size()) throw InputError("rmse: length mismatch");
  if (y.size() < 1) throw InputError("rmse: empty input");
  return std::sqrt((y - yhat).squaredNorm() / static_cast<double>(y.size()));
}

double nlpd(const Predictive& pred, const VectorXd& y) {
  if (pred.mean.size() != y.size() || pred.variance.size() != y.size()) {
    throw InputError("nlpd: length mismatch");
  }
  if (y.size() < 1) throw InputError("nlpd: empty input");
  if ((pred.variance.array() <= 0.0).any()) throw InputError("nlpd: variances must be positive");
  const Eigen::ArrayXd v = pred.variance.array();
  const Eigen::ArrayXd r = y.array() - pred.mean.array();
  return (0.5 * std::log(2.0 * M_PI) + 0.5 * v.log() + 0.5 * r.square() / v).mean();
}

double empirical_quantile(Eigen::Ref<const VectorXd> sorted, double p) {
  const Eigen::Index s = sorted.size();
  if (s < 1) throw InputError("empirical_quantile: no samples");
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(s - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const Eigen::Index hi = std::min(lo + 1, s - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double ece(const MatrixXd& samples, const VectorXd& y, int K) {
  if (samples.rows() < 2) throw InputError("ece: need at least two samples");
  if (samples.cols() != y.size()) throw InputError("ece: samples/targets mismatch");
  if (K < 1) throw InputError("ece: K must be >= 1");
  const Eigen::Index n = y.size();
  if (n == 0) throw InputError("ece: empty input");
  std::vector<Eigen::Index> inside(static_cast<std::size_t>(K), 0);
  VectorXd col;
  for (Eigen::Index i = 0; i < n; ++i) {
    col = samples.col(i);
    std::sort(col.data(), col.data() + col.size());
    for (int k = 0; k < K; ++k) {
      const double c = (k + 0.5) / K;
      const double lo = empirical_quantile(col, 0.5 - c / 2.0);
      const double hi = empirical_quantile(col, 0.5 + c / 2.0);
      if (y[i] >= lo && y[i] <= hi) ++inside[static_cast<std::size_t>(k)];
    }
  }
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    const double c = (k + 0.5) / K;
    total += std::abs(static_cast<double>(inside[static_cast<std::size_t>(k)]) / static_cast<double>(n) - c);
  }
  return total / K;
}

}  // namespace streamgp
