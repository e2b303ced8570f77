#pragma once

#include <string>
#include <vector>

#include "rtreg/solver.hpp"
#include "rtreg/types.hpp"

namespace rtreg {

enum class AnchorPolicy { first, min_shift, explicit_index };

struct EdslConfig {
  double c_lambda_1 = 1.0;
  double c_lambda_2 = 0.5;
  int s_hint = 0;  // 0 = auto: support size of the anchor's initial fit, floored at 1
  int max_rounds = 8;
  AnchorPolicy anchor_policy = AnchorPolicy::min_shift;
  Eigen::Index anchor_index = -1;  // index into the full source list when explicit
  bool weight_by_n = false;        // n_j-weighted gradient mean instead of plain mean
};

struct EdslRound {
  int round = 0;           // 1-based: solve t -> t+1 uses lambda_{t+1}
  double lambda = 0.0;     // exact schedule value
  double l1_change = 0.0;  // ||beta_{t+1} - beta_t||_1
  double grad_correction_inf = 0.0;  // ||mean_j grad_j - grad_v||_inf at beta_t
  double surrogate_gap = 0.0;        // penalized surrogate at beta_t minus at beta_{t+1}; >= 0
};

struct EdslTrace {
  std::vector<EdslRound> rounds;
  double lambda0 = 0.0;        // schedule value at t = 0 (initial anchor fit)
  double lambda_floor = 0.0;   // c1 * sqrt(log p / sum n_i)
  int s_hint_used = 0;
  Eigen::Index anchor = -1;
  std::string stop_reason;     // converged | max_rounds | schedule_diverged

  /// Columns: round, lambda_t, l1_change.
  std::string to_csv() const;
};

/// Exact Algorithm-1 schedule value at round t, reproducible from config.
double edsl_lambda(const EdslConfig& config, Eigen::Index p, double sum_n,
                   double n_anchor, int s_hint, int t);

/// -(1/n) X^T (y - X beta)
Eigen::VectorXd gradient(const LabeledDataset& dataset, const Eigen::VectorXd& beta);

/// One-machine-solve, all-machine-gradient aggregation over the selected
/// sources. Each round solves a penalized surrogate on the anchor dataset
/// with the averaged-gradient correction as a linear offset.
///
/// `shift_hints` (one value per source, NaN allowed for non-candidates) is
/// consulted only by the min_shift anchor policy.
std::pair<SparseCoefficients, EdslTrace> edsl_aggregate(
    const std::vector<LabeledDataset>& sources, const std::vector<Eigen::Index>& selected,
    const EdslConfig& config, const SolverSettings& settings,
    const std::vector<double>& shift_hints = {});

}  // namespace rtreg
