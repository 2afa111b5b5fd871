#include "streamgp/multidim.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "streamgp/errors.hpp"

namespace streamgp {

const char* to_string(OrderingKind kind) {
  switch (kind) {
    case OrderingKind::kRandom:
      return "random";
    case OrderingKind::kKMax:
      return "kmax";
    case OrderingKind::kKMin:
      return "kmin";
    case OrderingKind::kByDimension:
      return "dim";
    case OrderingKind::kByL2:
      return "l2";
  }
  return "unknown";
}

std::vector<Eigen::Index> order_points(const MatrixXd& X, const OrderingStrategy& strategy,
                                       const Kernel* kernel, const std::optional<VectorXd>& prev_anchor) {
  const Eigen::Index n = X.rows();
  if (n == 0) throw InputError("order_points: empty input");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  switch (strategy.kind) {
    case OrderingKind::kRandom: {
      std::mt19937_64 rng(strategy.seed);
      for (Eigen::Index i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<Eigen::Index> pick(0, i);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
      }
      return perm;
    }
    case OrderingKind::kByDimension: {
      if (strategy.dimension < 0 || strategy.dimension >= X.cols()) {
        throw InputError("order_points: dimension index out of range");
      }
      const int d = strategy.dimension;
      std::stable_sort(perm.begin(), perm.end(), [&](Eigen::Index a, Eigen::Index b) { return X(a, d) < X(b, d); });
      return perm;
    }
    case OrderingKind::kByL2: {
      const VectorXd norms = X.rowwise().squaredNorm();
      std::stable_sort(perm.begin(), perm.end(), [&](Eigen::Index a, Eigen::Index b) { return norms[a] < norms[b]; });
      return perm;
    }
    case OrderingKind::kKMax:
    case OrderingKind::kKMin: {
      if (kernel == nullptr) throw InputError("order_points: greedy ordering needs a kernel");
      const bool maximize = strategy.kind == OrderingKind::kKMax;
      VectorXd current = prev_anchor.value_or(VectorXd::Zero(X.cols()));
      if (current.size() != X.cols()) throw InputError("order_points: anchor dimension mismatch");
      std::vector<bool> used(static_cast<std::size_t>(n), false);
      std::vector<Eigen::Index> out;
      out.reserve(static_cast<std::size_t>(n));
      for (Eigen::Index step = 0; step < n; ++step) {
        const VectorXd sims = kernel_matrix(*kernel, X, current.transpose()).col(0);
        Eigen::Index best = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (used[static_cast<std::size_t>(i)]) continue;
          if (best < 0 || (maximize ? sims[i] > sims[best] : sims[i] < sims[best])) best = i;
        }
        used[static_cast<std::size_t>(best)] = true;
        out.push_back(best);
        current = X.row(best).transpose();
      }
      return out;
    }
  }
  return perm;
}

VectorXd assign_pseudo_times(int task_index, long counts_so_far, long n, double dt) {
  if (!(dt > 0.0)) throw InputError("assign_pseudo_times: dt must be positive");
  if (task_index < 0 || counts_so_far < 0 || n < 0) throw InputError("assign_pseudo_times: negative count");
  VectorXd t(n);
  for (long i = 0; i < n; ++i) t[i] = static_cast<double>(counts_so_far + i + 1) * dt;
  return t;
}

std::vector<Eigen::Index> strided_indices(long offset, long n, int stride) {
  if (stride < 1) throw InputError("stride must be >= 1");
  std::vector<Eigen::Index> idx;
  for (long i = 0; i < n; ++i) {
    if ((offset + i) % stride == 0) idx.push_back(i);
  }
  return idx;
}

PathSegment strided_kfu_step(PathRecurrence& path, const MatrixXd& ordered_inputs, long offset, int stride) {
  const std::vector<Eigen::Index> idx = strided_indices(offset, ordered_inputs.rows(), stride);
  MatrixXd pts(static_cast<Eigen::Index>(idx.size()), ordered_inputs.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) pts.row(static_cast<Eigen::Index>(i)) = ordered_inputs.row(idx[i]);
  return path.extend(pts);
}

}  // namespace streamgp
