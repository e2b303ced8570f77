#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtreg/types.hpp"

namespace rtreg {

/// Synthetic corrupted compressed-sensing panel: a sparse +-1 target signal,
/// label corruption on a fraction r of rows (applied as sqrt(n) times a
/// U[lo,hi] draw, the program scale), and L clean sources whose supports
/// overlap the target's.
struct SimDesign {
  Eigen::Index p = 400;
  Eigen::Index n_target = 100;
  Eigen::Index n_source = 100;
  int L = 5;
  int target_sparsity = 12;
  double corruption_fraction = 0.1;  // r
  double corruption_lo = 0.5;        // corruption_law U[lo, hi]
  double corruption_hi = 1.0;
  bool corruption_sign_flip = false;  // Rademacher * U[lo, hi]
  double noise_sd = 0.1;
  int source_sparsity_alt = 20;       // sparsity drawn with probability 1/L
  int shared_support_size = 12;       // coordinates shared with the target
  double shift_lo = 2.0;              // ||Delta_j||_1 range for shifted sources
  double shift_hi = 24.0;
  bool cs_unit_scaling = false;  // design entry variance 1/n instead of 1/sqrt(n)
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidDesign naming the violated constraint
};

struct SimInstance {
  LabeledDataset target;
  SparseCoefficients truth_beta;
  CorruptionVector truth_e;  // program scale: response offset is sqrt(n) * e_i
  std::vector<LabeledDataset> sources;
  std::vector<SparseCoefficients> truth_source_betas;
  SimDesign design_echo;

  double true_shift_l1(size_t source) const;  // ||beta_source - beta*||_1
};

SimInstance generate(const SimDesign& design);

/// Derived per-replicate seed so sweep results are independent of
/// scheduling: mixes (seed, design index, rep).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index);

struct BenchmarkCell {
  SimDesign design;
  std::string method;
  int reps = 0;
  int completed = 0;
  double mean_ser_db = 0.0;
  double se_ser_db = 0.0;
  double sign_rate = 0.0;
  int failures = 0;
  std::string first_error;
};

struct BenchmarkTable {
  std::vector<BenchmarkCell> cells;
  std::string to_csv() const;
};

}  // namespace rtreg
