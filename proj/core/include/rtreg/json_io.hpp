#pragma once

#include <filesystem>

#include <json.hpp>

#include "rtreg/bench.hpp"
#include "rtreg/pipeline.hpp"
#include "rtreg/simulation.hpp"

namespace rtreg {

using json = nlohmann::ordered_json;

// Report emission (output-only): coefficient vectors carry both a dense
// array and (index, value) sparse pairs.
json to_json(const SparseCoefficients& c);
json to_json(const CorruptionVector& c);
json to_json(const NoiseScaleEstimate& s);
json to_json(const EdslTrace& t);
json to_json(const SelectionResult& s);
json to_json(const AhtDecision& d);
json to_json(const TransferFit& t);
json to_json(const PilotFit& p);
json to_json(const FitReport& r);
json to_json(const BenchmarkCell& c);

// Config round trip. Parsers fill defaults for absent fields and reject
// unknown keys with a ConfigError naming them.
json to_json(const SolverSettings& s);
json to_json(const EdslConfig& c);
json to_json(const TuningGrid& g);
json to_json(const AhtParams& a);
json to_json(const ShiftPenalties& p);
json to_json(const PipelineConfig& c);
json to_json(const SimDesign& d);

SolverSettings solver_settings_from_json(const json& j);
EdslConfig edsl_config_from_json(const json& j);
TuningGrid tuning_grid_from_json(const json& j);
AhtParams aht_params_from_json(const json& j);
ShiftPenalties shift_penalties_from_json(const json& j);
PipelineConfig pipeline_config_from_json(const json& j);
SimDesign sim_design_from_json(const json& j);
BenchmarkCell benchmark_cell_from_json(const json& j);

/// Canonical file form: dump with 2-space indent plus a trailing newline, so
/// parse -> write reproduces the file byte for byte.
void write_json_file(const std::filesystem::path& path, const json& j);
json read_json_file(const std::filesystem::path& path);

}  // namespace rtreg
