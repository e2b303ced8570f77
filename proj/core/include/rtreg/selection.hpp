#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtreg/solver.hpp"
#include "rtreg/transfer.hpp"
#include "rtreg/types.hpp"

namespace rtreg {

struct ShiftEstimate {
  Eigen::Index source_index = -1;
  double h_hat = 0.0;  // 2 * ||merged_fit - solo_fit||_1
  SparseCoefficients merged_fit;
  SparseCoefficients solo_fit;
  bool failed = false;
  std::string error;
};

struct SelectionResult {
  std::vector<Eigen::Index> selected;  // ascending source indices
  Eigen::Index validation_index = -1;  // argmin h_hat (smallest index on ties)
  std::vector<ShiftEstimate> shift_table;
};

/// Penalties for shift estimation. Negative entries are resolved from
/// sigma_hat and the dataset sizes:
///   merged beta:  sigma * sqrt(log p / (n0 + nj))
///   merged e:     sigma * sqrt(2 log(n0 + nj) / (n0 + nj))
///   solo lasso:   2 sigma * sqrt(log p / nj)
struct ShiftPenalties {
  double sigma_hat = 1.0;
  double lambda_beta = -1.0;
  double lambda_e = -1.0;
  double lambda_solo = -1.0;
};

/// Robust fit on the row-stacked dataset [source; target] with the
/// stacked-n scaling; estimates (beta_source + beta_target)/2.
std::pair<SparseCoefficients, CorruptionVector> merged_robust_fit(
    const LabeledDataset& target, const LabeledDataset& source, double lambda_beta,
    double lambda_e, const SolverSettings& settings = {});

/// Per-source solo Lasso + merged robust fit + h_hat. Per-source failures
/// are recorded in the table, not fatal, unless every source fails.
std::vector<ShiftEstimate> estimate_shifts(const LabeledDataset& target,
                                           const std::vector<LabeledDataset>& sources,
                                           const ShiftPenalties& penalties,
                                           const SolverSettings& settings = {});

/// selected = {j : h_hat_j <= h} intersected with the A_cap smallest by
/// h_hat (ties to the lower index); validation = global argmin h_hat.
SelectionResult sds_select(const std::vector<ShiftEstimate>& shift_table, double h,
                           Eigen::Index A_cap);

/// Robust fit with default (pilot) penalties, iterated to a stable noise
/// scale. The corruption count is |{i : |e_i| >= C_tilde sqrt(log n / n)}|.
struct PilotFit {
  SparseCoefficients beta;
  CorruptionVector e;
  NoiseScaleEstimate sigma;
  double lambda_beta = 0.0;
  double lambda_e = 0.0;
  int corruption_count = 0;
  int iterations = 0;
};

PilotFit pilot_robust_fit(const LabeledDataset& target,
                          const SolverSettings& settings = {}, double C_tilde = 3.0,
                          std::uint64_t seed = 0);

int estimate_corruption_count(const LabeledDataset& target,
                              const SolverSettings& settings = {},
                              double C_tilde = 3.0, std::uint64_t seed = 0);

/// Hyperparameter grid for the delta fit. Explicit value lists win when
/// nonempty; otherwise each multiplier scales the sigma-based unit:
///   delta base: sigma * sqrt(log p / n0),  e base: sigma * sqrt(2 log n0 / n0).
struct TuningGrid {
  std::vector<double> delta_multipliers{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> e_multipliers{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> delta_values;
  std::vector<double> e_values;

  std::vector<double> resolve_delta(double sigma_hat, Eigen::Index n0,
                                    Eigen::Index p) const;
  std::vector<double> resolve_e(double sigma_hat, Eigen::Index n0) const;
};

struct AhtParams {
  int c_h = 10;             // corruption-count branch threshold
  double c_tilde = -1.0;    // shift budget; negative = auto
  double C_tilde = 3.0;     // corruption detection constant
  int k0 = 5;               // folds
  std::uint64_t seed = 0;   // fold shuffling
};

enum class AhtBranch { validation_based, cross_validation };

struct AhtScore {
  double lambda_delta = 0.0;
  double lambda_e = 0.0;
  double score = 0.0;    // validation loss or CV loss
  double delta_l1 = 0.0; // ||Delta||_1 (mean over folds in the CV branch)
  bool feasible = true;  // validation branch: ||Delta||_1 <= c_tilde
};

struct AhtDecision {
  int corruption_count_estimate = 0;
  AhtBranch branch = AhtBranch::cross_validation;
  double lambda_delta = 0.0;  // chosen pair
  double lambda_e = 0.0;
  std::vector<AhtScore> score_table;
  double c_tilde_used = 0.0;
  bool feasibility_fallback = false;  // every pair violated the shift budget
};

/// Adaptive tuning. If the estimated corruption count exceeds c_h, each grid
/// pair is scored by the squared loss on the validation source, with pairs
/// whose ||Delta||_1 exceeds the shift budget filtered out (falling back to
/// the smallest-||Delta||_1 pair when none survive). Otherwise k0-fold
/// cross-validation on the target; rows the pilot fit flagged as corrupted
/// (nonzero pilot_corruption) are excluded from every pair's held-out score
/// so the comparison across pairs stays unbiased.
AhtDecision aht_tune(const LabeledDataset& target,
                     const std::vector<LabeledDataset>& sources,
                     const std::vector<Eigen::Index>& selected,
                     Eigen::Index validation_index,
                     const SparseCoefficients& beta_source, const TuningGrid& grid,
                     const AhtParams& params, int corruption_count, double sigma_hat,
                     double lambda_t_final, const CorruptionVector& pilot_corruption,
                     const SolverSettings& settings = {});

/// Partition of {0..n-1} into k0 folds with sizes differing by at most one;
/// deterministic per seed.
std::vector<std::vector<Eigen::Index>> kfold_split(Eigen::Index n, int k0,
                                                   std::uint64_t seed);

}  // namespace rtreg
