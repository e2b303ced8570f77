#include "rtreg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rtreg/errors.hpp"

namespace rtreg {
namespace {

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

// Precision/recall of the estimated support against the true support.
// Empty prediction has precision 1; empty truth has recall 1.
std::pair<double, double> support_pr(const Eigen::VectorXd& truth,
                                     const Eigen::VectorXd& est) {
  Eigen::Index hits = 0, est_n = 0, truth_n = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] != 0.0;
    const bool e = est[i] != 0.0;
    truth_n += t;
    est_n += e;
    hits += t && e;
  }
  const double precision = est_n == 0 ? 1.0 : static_cast<double>(hits) / est_n;
  const double recall = truth_n == 0 ? 1.0 : static_cast<double>(hits) / truth_n;
  return {precision, recall};
}

}  // namespace

SerScore ser_db(const Eigen::VectorXd& truth, const Eigen::VectorXd& estimate) {
  if (truth.size() != estimate.size()) {
    throw DimensionMismatch("ser_db: length mismatch");
  }
  const double truth_energy = truth.squaredNorm();
  if (truth_energy == 0.0) throw ZeroTruth("ser_db: truth vector is identically zero");
  const double err_energy = (truth - estimate).squaredNorm();
  if (err_energy == 0.0) return {0.0, true};
  return {10.0 * std::log10(truth_energy / err_energy), false};
}

RecoveryScore recovery_score(const SparseCoefficients& truth_beta,
                             const SparseCoefficients& est_beta,
                             const CorruptionVector& truth_e,
                             const CorruptionVector& est_e) {
  if (truth_beta.size() != est_beta.size() || truth_e.size() != est_e.size()) {
    throw DimensionMismatch("recovery_score: length mismatch");
  }
  RecoveryScore score;
  score.sign_match = true;
  for (Eigen::Index j = 0; j < truth_beta.size(); ++j) {
    if (sign_of(truth_beta.values[j]) != sign_of(est_beta.values[j])) {
      score.sign_match = false;
      break;
    }
  }
  std::tie(score.support_precision, score.support_recall) =
      support_pr(truth_beta.values, est_beta.values);
  std::tie(score.corruption_precision, score.corruption_recall) =
      support_pr(truth_e.values, est_e.values);
  return score;
}

double mmd_rbf(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double bandwidth) {
  if (a.rows() == 0 || b.rows() == 0) throw EmptyDataset("mmd_rbf: empty dataset");
  if (a.cols() != b.cols()) throw DimensionMismatch("mmd_rbf: column counts differ");
  if (!(bandwidth > 0.0)) throw ConfigError("mmd_rbf: bandwidth must be > 0");

  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  auto mean_kernel = [inv](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < y.rows(); ++j) {
        total += std::exp(-(x.row(i) - y.row(j)).squaredNorm() * inv);
      }
    }
    return total / (static_cast<double>(x.rows()) * static_cast<double>(y.rows()));
  };

  const double mmd2 = mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * mean_kernel(a, b);
  return std::sqrt(std::max(0.0, mmd2));
}

double mmd_median_bandwidth(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() == 0 || b.rows() == 0) throw EmptyDataset("mmd bandwidth: empty dataset");
  if (a.cols() != b.cols()) throw DimensionMismatch("mmd bandwidth: column counts differ");
  Eigen::MatrixXd pooled(a.rows() + b.rows(), a.cols());
  pooled.topRows(a.rows()) = a;
  pooled.bottomRows(b.rows()) = b;

  std::vector<double> dist;
  dist.reserve(static_cast<size_t>(pooled.rows() * (pooled.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < pooled.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < pooled.rows(); ++j) {
      dist.push_back((pooled.row(i) - pooled.row(j)).norm());
    }
  }
  if (dist.empty()) return 1.0;
  std::nth_element(dist.begin(), dist.begin() + dist.size() / 2, dist.end());
  const double med = dist[dist.size() / 2];
  return med > 0.0 ? med : 1.0;
}

}  // namespace rtreg
