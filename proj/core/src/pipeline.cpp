#include "rtreg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "rtreg/errors.hpp"

namespace rtreg {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& ex) {
    throw StageError(name, ex.what());
  }
}

struct Prepared {
  LabeledDataset target;
  std::vector<LabeledDataset> sources;
  StandardizationRecord record;
};

Prepared prepare(const LabeledDataset& target, const std::vector<LabeledDataset>& sources,
                 const PipelineConfig& config) {
  validate_panel(target, sources);
  Prepared out;
  if (config.standardize) {
    // One transform, fitted on the target, applied everywhere: coefficients
    // from different datasets must share column units.
    auto [std_target, record] = standardize(target);
    out.target = std::move(std_target);
    out.record = std::move(record);
    out.sources.reserve(sources.size());
    for (const auto& src : sources) {
      out.sources.push_back(standardize_with(src, out.record));
    }
  } else {
    out.target = target;
    out.sources = sources;
    out.record = StandardizationRecord::identity(target.cols());
  }
  return out;
}

/// Back-transforms the solving-scale pieces, assembles, and thresholds on
/// the original scale.
void finish_transfer(FitReport& report, const SparseCoefficients& beta_source_solving,
                     const SparseCoefficients& delta_solving,
                     const CorruptionVector& corruption, double lambda_t_final,
                     double lambda_delta, double lambda_e, Eigen::Index n0,
                     Eigen::Index p, const PipelineConfig& config) {
  TransferFit& tf = report.transfer;
  tf.beta_source =
      SparseCoefficients(report.record.coefficients_to_original(beta_source_solving.values));
  tf.delta = SparseCoefficients(report.record.coefficients_to_original(delta_solving.values));
  tf.corruption = corruption;
  tf.beta_final = assemble(tf.beta_source, tf.delta);
  tf.lambda_delta = lambda_delta;
  tf.lambda_e = lambda_e;
  tf.threshold_used = config.gamma1 >= 0.0
                          ? config.gamma1
                          : compute_tn(report.sigma, n0, p, lambda_t_final, lambda_delta);
  tf.beta_thresholded = hard_threshold(tf.beta_final, tf.threshold_used);
}

FitReport run_common(const LabeledDataset& raw_target,
                     const std::vector<LabeledDataset>& raw_sources,
                     const PipelineConfig& config, PipelineMode requested_mode,
                     const std::vector<Eigen::Index>* known_A,
                     const std::optional<std::vector<double>>& known_shifts) {
  const auto t_start = Clock::now();
  FitReport report;
  report.config = config;
  report.mode = requested_mode;

  Prepared data = stage("prepare", [&] { return prepare(raw_target, raw_sources, config); });
  report.record = data.record;
  const Eigen::Index n0 = data.target.rows();
  const Eigen::Index p = data.target.cols();

  // Pilot robust fit on the target alone: noise scale + corruption count.
  auto t0 = Clock::now();
  report.pilot = stage("pilot", [&] {
    return pilot_robust_fit(data.target, config.solver, config.aht.C_tilde, config.seed);
  });
  report.sigma = report.pilot.sigma;
  report.timings.pilot_s = seconds_since(t0);
  const double sigma_hat = report.sigma.sigma_hat;

  // Source screening (or the given oracle set).
  t0 = Clock::now();
  std::vector<double> shift_hints(data.sources.size(),
                                  std::numeric_limits<double>::quiet_NaN());
  if (requested_mode == PipelineMode::oracle) {
    if (!known_A || known_A->empty()) {
      throw StageError("sds", "oracle mode requires a nonempty known source set");
    }
    for (Eigen::Index j : *known_A) {
      if (j < 0 || static_cast<size_t>(j) >= data.sources.size()) {
        throw StageError("sds", "oracle source index " + std::to_string(j) +
                                    " is out of range");
      }
    }
    report.selection.selected = *known_A;
    std::sort(report.selection.selected.begin(), report.selection.selected.end());

    if (known_shifts) {
      if (known_shifts->size() != data.sources.size()) {
        throw StageError("sds", "known_shifts must have one entry per source");
      }
      shift_hints = *known_shifts;
      for (size_t j = 0; j < data.sources.size(); ++j) {
        ShiftEstimate e;
        e.source_index = static_cast<Eigen::Index>(j);
        e.h_hat = (*known_shifts)[j];
        report.selection.shift_table.push_back(std::move(e));
      }
    } else {
      ShiftPenalties pen = config.shift_penalties;
      pen.sigma_hat = sigma_hat;
      std::vector<LabeledDataset> subset;
      for (Eigen::Index j : report.selection.selected) {
        subset.push_back(data.sources[static_cast<size_t>(j)]);
      }
      auto table = stage("sds", [&] {
        return estimate_shifts(data.target, subset, pen, config.solver);
      });
      for (size_t k = 0; k < table.size(); ++k) {
        table[k].source_index = report.selection.selected[k];
        if (!table[k].failed) {
          shift_hints[static_cast<size_t>(table[k].source_index)] = table[k].h_hat;
        }
      }
      report.selection.shift_table = std::move(table);
    }
    // v = min-shift member of the known set.
    Eigen::Index best = -1;
    double best_h = std::numeric_limits<double>::infinity();
    for (Eigen::Index j : report.selection.selected) {
      const double hj = shift_hints[static_cast<size_t>(j)];
      if (std::isfinite(hj) && hj < best_h) {
        best_h = hj;
        best = j;
      }
    }
    report.selection.validation_index =
        best >= 0 ? best : report.selection.selected.front();
  } else if (!data.sources.empty()) {
    ShiftPenalties pen = config.shift_penalties;
    pen.sigma_hat = sigma_hat;
    auto table = stage("sds", [&] {
      return estimate_shifts(data.target, data.sources, pen, config.solver);
    });
    const Eigen::Index cap =
        config.A_cap < 0 ? static_cast<Eigen::Index>(data.sources.size()) : config.A_cap;
    report.selection = stage("sds", [&] { return sds_select(table, config.h, cap); });
    for (const auto& row : report.selection.shift_table) {
      if (!row.failed) shift_hints[static_cast<size_t>(row.source_index)] = row.h_hat;
    }
  }
  report.timings.sds_s = seconds_since(t0);

  // Fallback: nothing to transfer from.
  if (report.selection.selected.empty()) {
    if (requested_mode == PipelineMode::oracle) {
      throw StageError("sds", "oracle mode demands the given set; selection is empty");
    }
    report.mode = PipelineMode::fallback_target_only;
    report.tuning.corruption_count_estimate = report.pilot.corruption_count;
    report.tuning.branch = report.pilot.corruption_count > config.aht.c_h
                               ? AhtBranch::validation_based
                               : AhtBranch::cross_validation;
    report.tuning.lambda_delta = report.pilot.lambda_beta;
    report.tuning.lambda_e = report.pilot.lambda_e;
    report.edsl_beta = SparseCoefficients::zeros(p);
    finish_transfer(report, SparseCoefficients::zeros(p), report.pilot.beta,
                    report.pilot.e, /*lambda_t_final=*/0.0, report.pilot.lambda_beta,
                    report.pilot.lambda_e, n0, p, config);
    report.timings.total_s = seconds_since(t_start);
    return report;
  }

  // Aggregate estimation on the selected sources, anchored at the
  // minimum-shift member. The schedule constants are sigma-free multipliers;
  // the additive term gets the universal 2 sigma scale here.
  t0 = Clock::now();
  EdslConfig edsl_cfg = config.edsl;
  edsl_cfg.c_lambda_1 = 2.0 * sigma_hat * config.edsl.c_lambda_1;
  auto [beta_d, trace] = stage("edsl", [&] {
    return edsl_aggregate(data.sources, report.selection.selected, edsl_cfg,
                          config.solver, shift_hints);
  });
  report.edsl_beta = std::move(beta_d);
  report.edsl_trace = std::move(trace);
  report.timings.edsl_s = seconds_since(t0);
  const double lambda_t_final = report.edsl_trace.rounds.empty()
                                    ? report.edsl_trace.lambda0
                                    : report.edsl_trace.rounds.back().lambda;

  // Adaptive hyperparameter tuning.
  t0 = Clock::now();
  AhtParams aht = config.aht;
  aht.seed = config.seed;
  report.tuning = stage("aht", [&] {
    return aht_tune(data.target, data.sources, report.selection.selected,
                    report.selection.validation_index, report.edsl_beta, config.grid,
                    aht, report.pilot.corruption_count, sigma_hat, lambda_t_final,
                    report.pilot.e, config.solver);
  });
  report.timings.aht_s = seconds_since(t0);

  // Final transfer correction (a cold solve so the recorded inputs reproduce
  // the recorded outputs exactly).
  t0 = Clock::now();
  auto [delta, e_hat] = stage("transfer", [&] {
    return fit_delta(data.target, report.edsl_beta, report.tuning.lambda_delta,
                     report.tuning.lambda_e, config.solver);
  });
  finish_transfer(report, report.edsl_beta, delta, e_hat, lambda_t_final,
                  report.tuning.lambda_delta, report.tuning.lambda_e, n0, p, config);
  report.timings.transfer_s = seconds_since(t0);
  report.timings.total_s = seconds_since(t_start);
  return report;
}

}  // namespace

std::string to_string(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::oracle: return "oracle";
    case PipelineMode::rtl: return "rtl";
    case PipelineMode::fallback_target_only: return "fallback_target_only";
  }
  return "unknown";
}

FitReport run_rtl(const LabeledDataset& target,
                  const std::vector<LabeledDataset>& sources,
                  const PipelineConfig& config) {
  return run_common(target, sources, config, PipelineMode::rtl, nullptr, std::nullopt);
}

FitReport run_oracle(const LabeledDataset& target,
                     const std::vector<LabeledDataset>& sources,
                     const std::vector<Eigen::Index>& known_A,
                     const PipelineConfig& config,
                     const std::optional<std::vector<double>>& known_shifts) {
  if (known_A.empty()) {
    throw EmptySelection("run_oracle: known source set must be nonempty");
  }
  return run_common(target, sources, config, PipelineMode::oracle, &known_A, known_shifts);
}

}  // namespace rtreg
