#pragma once

#include "rtreg/types.hpp"

namespace rtreg {

struct SerScore {
  double value_db = 0.0;
  bool infinite = false;  // estimate equals truth exactly
};

/// 10 log10(||truth||^2 / ||truth - estimate||^2). Throws ZeroTruth when the
/// truth vector is identically zero.
SerScore ser_db(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate);

struct RecoveryScore {
  bool sign_match = false;  // sign(est) == sign(truth) on every coordinate
  double support_precision = 1.0;
  double support_recall = 1.0;
  double corruption_precision = 1.0;
  double corruption_recall = 1.0;
};

RecoveryScore recovery_score(const SparseCoefficients& truth_beta,
                             const SparseCoefficients& est_beta,
                             const CorruptionVector& truth_e,
                             const CorruptionVector& est_e);

/// Biased (V-statistic) empirical MMD with the radial kernel
/// k(u,v) = exp(-||u-v||^2 / (2 bandwidth^2)); returns sqrt of the squared
/// statistic, clamped at zero.
double mmd_rbf(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double bandwidth);

/// Median pairwise distance over the pooled rows; the default bandwidth.
double mmd_median_bandwidth(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace rtreg
