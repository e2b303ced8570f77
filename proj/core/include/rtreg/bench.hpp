#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rtreg/pipeline.hpp"
#include "rtreg/simulation.hpp"

namespace rtreg {

/// One replicate score for a method on a generated instance.
struct MethodScore {
  double ser_db = 0.0;
  bool ser_infinite = false;
  bool sign_match = false;
};

/// Runs one method tag (lasso | rlasso | rtl | oracle) on an instance and
/// scores the reconstruction against the truth.
MethodScore run_method(const std::string& method, const SimInstance& inst,
                       const PipelineConfig& base_config, std::uint64_t rep_seed);

/// CV-tuned plain Lasso baseline (no corruption handling); returns the
/// original-scale estimate.
SparseCoefficients lasso_cv_baseline(const LabeledDataset& target, int k0,
                                     std::uint64_t seed, const SolverSettings& settings);

/// Monte-Carlo sweep over (design, method, rep). The same replicate seed is
/// derived from (design seed, design index, rep) for every method, so
/// methods are compared on identical instances and results do not depend on
/// scheduling or worker count.
///
/// `on_cell_done` (optional) fires after each (design, method) cell with the
/// completed cell — the bench command uses it to checkpoint a manifest.
BenchmarkTable sweep(const std::vector<SimDesign>& designs,
                     const std::vector<std::string>& methods, int reps,
                     const PipelineConfig& base_config, int jobs = 1,
                     const std::function<void(size_t design_idx, const BenchmarkCell&)>&
                         on_cell_done = {},
                     const std::function<bool(size_t design_idx, const std::string& method,
                                              BenchmarkCell&)>& resume_lookup = {});

}  // namespace rtreg
