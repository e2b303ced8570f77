#pragma once

#include <string>
#include <utility>

#include "rtreg/solver.hpp"
#include "rtreg/types.hpp"

namespace rtreg {

struct NoiseScaleEstimate {
  double sigma_hat = 0.0;
  std::string method = "mad_clean_rows";
};

/// Result of the transfer-correction step. All coefficient vectors live on
/// one scale (the pipeline back-transforms to original column units before
/// filling this in), so the invariants hold componentwise:
///   beta_final = beta_source + delta
///   beta_thresholded_j = beta_final_j * 1{|beta_final_j| >= threshold_used}
struct TransferFit {
  SparseCoefficients beta_source;
  SparseCoefficients delta;
  CorruptionVector corruption;
  SparseCoefficients beta_final;
  SparseCoefficients beta_thresholded;
  double threshold_used = 0.0;
  double lambda_delta = 0.0;  // hyperparameters the delta fit used
  double lambda_e = 0.0;
};

/// Joint fit of the shift and the corruption around a fixed source estimate:
/// robust_lasso_fit with beta_offset = beta_source.
std::pair<SparseCoefficients, CorruptionVector> fit_delta(
    const LabeledDataset& target, const SparseCoefficients& beta_source,
    double lambda_delta, double lambda_e, const SolverSettings& settings = {});

/// Elementwise sum beta_source + delta.
SparseCoefficients assemble(const SparseCoefficients& beta_source,
                            const SparseCoefficients& delta);

/// Zeroes entries with |value| < gamma; |value| == gamma is kept.
SparseCoefficients hard_threshold(const SparseCoefficients& beta, double gamma);

/// 9 s sqrt(log p / n0) + 12 s lambda_t + 3 lambda_t + 4 s lambda_delta
///   + lambda_delta, with s = sigma_hat. The asymptotic (1+o(1)) factor is
/// taken as exactly 1.
double compute_tn(const NoiseScaleEstimate& sigma, Eigen::Index n0, Eigen::Index p,
                  double lambda_t_final, double lambda_delta);

/// Robust residual scale: 1.4826 * MAD of Y - X beta - sqrt(n) e restricted
/// to rows with e == 0. Throws DegenerateResiduals when fewer than 10 clean
/// rows remain or the MAD is exactly zero.
NoiseScaleEstimate estimate_sigma(const LabeledDataset& target,
                                  const SparseCoefficients& beta,
                                  const CorruptionVector& corruption);

}  // namespace rtreg
