#include "rtreg/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rtreg/errors.hpp"

namespace rtreg {
namespace {

double median_inplace(std::vector<double>& v) {
  const size_t n = v.size();
  std::sort(v.begin(), v.end());
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::pair<SparseCoefficients, CorruptionVector> fit_delta(
    const LabeledDataset& target, const SparseCoefficients& beta_source,
    double lambda_delta, double lambda_e, const SolverSettings& settings) {
  if (beta_source.size() != target.cols()) {
    throw DimensionMismatch("fit_delta: beta_source length != p");
  }
  RobustLassoProblem pb;
  pb.design = target.design;
  pb.response = target.response;
  pb.lambda_beta = lambda_delta;
  pb.lambda_e = lambda_e;
  pb.beta_offset = beta_source.values;
  return robust_lasso_fit(pb, settings);
}

SparseCoefficients assemble(const SparseCoefficients& beta_source,
                            const SparseCoefficients& delta) {
  if (beta_source.size() != delta.size()) {
    throw DimensionMismatch("assemble: length mismatch");
  }
  return SparseCoefficients(beta_source.values + delta.values);
}

SparseCoefficients hard_threshold(const SparseCoefficients& beta, double gamma) {
  if (gamma < 0.0) throw ConfigError("hard_threshold: gamma must be >= 0");
  SparseCoefficients out = beta;
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    if (std::abs(out.values[j]) < gamma) out.values[j] = 0.0;
  }
  return out;
}

double compute_tn(const NoiseScaleEstimate& sigma, Eigen::Index n0, Eigen::Index p,
                  double lambda_t_final, double lambda_delta) {
  const double s = sigma.sigma_hat;
  const double root = std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n0));
  return 9.0 * s * root + 12.0 * s * lambda_t_final + 3.0 * lambda_t_final +
         4.0 * s * lambda_delta + lambda_delta;
}

NoiseScaleEstimate estimate_sigma(const LabeledDataset& target,
                                  const SparseCoefficients& beta,
                                  const CorruptionVector& corruption) {
  if (beta.size() != target.cols() || corruption.size() != target.rows()) {
    throw DimensionMismatch("estimate_sigma: candidate lengths do not match");
  }
  const double sqrt_n = std::sqrt(static_cast<double>(target.rows()));
  const Eigen::VectorXd residual = target.response - target.design * beta.values -
                                   sqrt_n * corruption.values;

  std::vector<double> clean;
  clean.reserve(static_cast<size_t>(target.rows()));
  for (Eigen::Index i = 0; i < target.rows(); ++i) {
    if (corruption.values[i] == 0.0) clean.push_back(residual[i]);
  }
  if (clean.size() < 10) {
    throw DegenerateResiduals("estimate_sigma: only " + std::to_string(clean.size()) +
                              " clean rows remain");
  }

  std::vector<double> work = clean;
  const double med = median_inplace(work);
  for (size_t i = 0; i < clean.size(); ++i) work[i] = std::abs(clean[i] - med);
  const double mad = median_inplace(work);
  if (mad <= 0.0) {
    throw DegenerateResiduals("estimate_sigma: residual MAD is zero");
  }
  return {1.4826 * mad, "mad_clean_rows"};
}

}  // namespace rtreg
