#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rtreg/data_model.hpp"
#include "rtreg/edsl.hpp"
#include "rtreg/selection.hpp"
#include "rtreg/transfer.hpp"
#include "rtreg/types.hpp"

namespace rtreg {

struct PipelineConfig {
  double h = 10.0;          // shift admission threshold for SDS
  Eigen::Index A_cap = -1;  // max selected sources; negative = no cap
  AhtParams aht;            // c_h, c_tilde, C_tilde, k0 (fold seed comes from `seed`)
  double gamma1 = -1.0;     // hard threshold; negative = data-driven t_n
  TuningGrid grid;
  EdslConfig edsl;
  SolverSettings solver;
  ShiftPenalties shift_penalties;  // sigma_hat is filled from the pilot
  bool standardize = true;
  std::uint64_t seed = 0;
};

enum class PipelineMode { oracle, rtl, fallback_target_only };

std::string to_string(PipelineMode mode);

struct PipelineTimings {
  double pilot_s = 0.0;
  double sds_s = 0.0;
  double edsl_s = 0.0;
  double aht_s = 0.0;
  double transfer_s = 0.0;
  double total_s = 0.0;
};

/// Full pipeline result. Solver-facing vectors (edsl_beta, pilot) are on the
/// solving scale (standardized when config.standardize); `transfer` is
/// reported on the original column units via `record`.
struct FitReport {
  int schema_version = 1;
  PipelineMode mode = PipelineMode::rtl;
  SelectionResult selection;  // selected = known_A in oracle mode
  SparseCoefficients edsl_beta;  // solving scale
  EdslTrace edsl_trace;
  AhtDecision tuning;
  TransferFit transfer;  // original scale
  NoiseScaleEstimate sigma;
  PilotFit pilot;
  StandardizationRecord record;
  PipelineTimings timings;
  PipelineConfig config;
};

/// Algorithm-6 flow: SDS -> EDSL -> AHT -> delta fit -> assemble ->
/// hard threshold. Falls back to the target-only robust fit when no source
/// survives screening (or L = 0).
FitReport run_rtl(const LabeledDataset& target,
                  const std::vector<LabeledDataset>& sources,
                  const PipelineConfig& config);

/// Algorithm-2 flow: the selected set is given, SDS is skipped, and the
/// validation source is the minimum-shift member (known_shifts when
/// provided, estimated otherwise). Never falls back.
FitReport run_oracle(const LabeledDataset& target,
                     const std::vector<LabeledDataset>& sources,
                     const std::vector<Eigen::Index>& known_A,
                     const PipelineConfig& config,
                     const std::optional<std::vector<double>>& known_shifts = std::nullopt);

}  // namespace rtreg
