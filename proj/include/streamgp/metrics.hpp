#pragma once

#include <Eigen/Dense>

#include "streamgp/gp_core.hpp"

namespace streamgp {

double rmse(const VectorXd& y, const VectorXd& yhat);

/// -mean_i log N(y_i; mean_i, variance_i). Pass a predictive that includes noise.
double nlpd(const Predictive& pred, const VectorXd& y);

/// Linear-interpolation empirical quantile (order statistics at p (S - 1)).
double empirical_quantile(Eigen::Ref<const VectorXd> sorted_samples, double p);

/// Mean over c_k = 0.05, 0.15, ..., 0.95 (K = 10) of |coverage_k - c_k|, where
/// coverage_k is the fraction of y_i inside the central c_k interval of the
/// samples in column i. `samples` is S x N.
double ece(const MatrixXd& samples, const VectorXd& y, int K = 10);

}  // namespace streamgp
