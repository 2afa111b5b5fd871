#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "streamgp/interdomain.hpp"
#include "streamgp/kernels.hpp"

namespace streamgp {

enum class OrderingKind { kRandom, kKMax, kKMin, kByDimension, kByL2 };

struct OrderingStrategy {
  OrderingKind kind = OrderingKind::kByDimension;
  std::uint64_t seed = 0;
  int dimension = 0;

  static OrderingStrategy random(std::uint64_t seed) { return {OrderingKind::kRandom, seed, 0}; }
  static OrderingStrategy k_max() { return {OrderingKind::kKMax, 0, 0}; }
  static OrderingStrategy k_min() { return {OrderingKind::kKMin, 0, 0}; }
  static OrderingStrategy by_dimension(int d) { return {OrderingKind::kByDimension, 0, d}; }
  static OrderingStrategy by_l2() { return {OrderingKind::kByL2, 0, 0}; }
};

const char* to_string(OrderingKind kind);

/// Visiting order of the rows of X. The greedy k_max / k_min chains start
/// from prev_anchor (the origin when absent) and never revisit a point; ties
/// go to the lowest index. `kernel` is only read by the greedy strategies.
std::vector<Eigen::Index> order_points(const MatrixXd& X, const OrderingStrategy& strategy,
                                       const Kernel* kernel,
                                       const std::optional<VectorXd>& prev_anchor = std::nullopt);

/// (offset + i) * dt for i = 1..n, offset = points seen in earlier tasks.
VectorXd assign_pseudo_times(int task_index, long counts_so_far, long n, double dt);

/// Positions (within the task) of the points the recurrence visits with the
/// given stride: global indices offset, offset+1, ... that are multiples of stride.
std::vector<Eigen::Index> strided_indices(long offset, long n, int stride);

/// Extends `path` (step stride * dt) with every stride-th point of the ordered
/// task inputs and returns the segment; callers advance rows/features with it.
PathSegment strided_kfu_step(PathRecurrence& path, const MatrixXd& ordered_inputs, long offset,
                             int stride);

}  // namespace streamgp
