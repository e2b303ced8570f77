#include "rtreg/simulation.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "rtreg/csv.hpp"
#include "rtreg/errors.hpp"

namespace rtreg {

void SimDesign::validate() const {
  auto fail = [](const std::string& what) { throw InvalidDesign("SimDesign: " + what); };
  if (p < 1) fail("p must be >= 1");
  if (n_target < 2 || n_source < 2) fail("n_target and n_source must be >= 2");
  if (L < 0) fail("L must be >= 0");
  if (target_sparsity < 1 || target_sparsity > p) fail("target_sparsity must be in [1, p]");
  if (corruption_fraction < 0.0 || corruption_fraction > 1.0) {
    fail("corruption_fraction must be in [0, 1]");
  }
  if (corruption_lo > corruption_hi) fail("corruption_law bounds are inverted");
  if (noise_sd < 0.0) fail("noise_sd must be >= 0");
  if (source_sparsity_alt < 1 || source_sparsity_alt > p) {
    fail("source_sparsity_alt must be in [1, p]");
  }
  if (shared_support_size < 0 || shared_support_size > target_sparsity) {
    fail("shared_support_size must be in [0, target_sparsity]");
  }
  if (shared_support_size > source_sparsity_alt) {
    fail("shared_support_size cannot exceed source_sparsity_alt");
  }
  if (shift_lo > shift_hi) fail("shift range is inverted");
}

double SimInstance::true_shift_l1(size_t source) const {
  return (truth_source_betas.at(source).values - truth_beta.values).lpNorm<1>();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1) +
                    0xbf58476d1ce4e5b9ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

std::vector<Eigen::Index> sample_without_replacement(std::vector<Eigen::Index> pool,
                                                     int count, std::mt19937_64& eng) {
  // Partial Fisher-Yates; first `count` entries are the sample.
  for (int i = 0; i < count; ++i) {
    const size_t j = i + static_cast<size_t>(eng() % (pool.size() - static_cast<size_t>(i)));
    std::swap(pool[static_cast<size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<size_t>(count));
  return pool;
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sd,
                                std::mt19937_64& eng) {
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(eng);
  }
  return m;
}

}  // namespace

SimInstance generate(const SimDesign& design) {
  design.validate();
  std::mt19937_64 eng(design.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SimInstance inst;
  inst.design_echo = design;
  const Eigen::Index p = design.p;
  const Eigen::Index n = design.n_target;
  const double entry_sd = design.cs_unit_scaling
                              ? 1.0 / std::sqrt(static_cast<double>(n))
                              : std::pow(static_cast<double>(n), -0.25);

  // Target signal: +-1 spikes on a random support.
  std::vector<Eigen::Index> all(static_cast<size_t>(p));
  std::iota(all.begin(), all.end(), 0);
  const auto support = sample_without_replacement(all, design.target_sparsity, eng);
  inst.truth_beta = SparseCoefficients::zeros(p);
  for (Eigen::Index j : support) {
    inst.truth_beta.values[j] = unit(eng) < 0.5 ? 1.0 : -1.0;
  }

  // Target data with corruption on round(r*n) rows.
  inst.target.id = "target";
  inst.target.kind = DatasetKind::target;
  inst.target.design = gaussian_matrix(n, p, entry_sd, eng);
  std::normal_distribution<double> noise(0.0, design.noise_sd);
  Eigen::VectorXd eps(n);
  for (Eigen::Index i = 0; i < n; ++i) eps[i] = design.noise_sd > 0 ? noise(eng) : 0.0;

  const int k = static_cast<int>(std::llround(design.corruption_fraction *
                                              static_cast<double>(n)));
  std::vector<Eigen::Index> row_pool(static_cast<size_t>(n));
  std::iota(row_pool.begin(), row_pool.end(), 0);
  const auto corrupted = sample_without_replacement(row_pool, k, eng);
  inst.truth_e = CorruptionVector::zeros(n);
  for (Eigen::Index i : corrupted) {
    double v = design.corruption_lo +
               (design.corruption_hi - design.corruption_lo) * unit(eng);
    if (design.corruption_sign_flip && unit(eng) < 0.5) v = -v;
    inst.truth_e.values[i] = v;
  }
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  inst.target.response = inst.target.design * inst.truth_beta.values +
                         sqrt_n * inst.truth_e.values + eps;

  // Sources: clean responses, supports overlapping the target's.
  std::vector<Eigen::Index> off_support;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (inst.truth_beta.values[j] == 0.0) off_support.push_back(j);
  }
  const double p_shared_sparsity = design.L > 0 ? 1.0 - 1.0 / design.L : 0.0;
  for (int s = 0; s < design.L; ++s) {
    const bool u = unit(eng) < p_shared_sparsity;
    const int sparsity = u ? design.target_sparsity : design.source_sparsity_alt;
    const int shared = std::min(design.shared_support_size, sparsity);
    const int extra = sparsity - shared;

    SparseCoefficients beta_s = SparseCoefficients::zeros(p);
    const auto shared_coords =
        sample_without_replacement(support, shared, eng);
    for (Eigen::Index j : shared_coords) beta_s.values[j] = inst.truth_beta.values[j];

    // Mass the target carries on coordinates this source misses.
    double fixed_missing = 0.0;
    for (Eigen::Index j : support) {
      if (beta_s.values[j] == 0.0) fixed_missing += std::abs(inst.truth_beta.values[j]);
    }

    if (extra > 0) {
      const double shift_draw =
          design.shift_lo + (design.shift_hi - design.shift_lo) * unit(eng);
      const double extra_mass =
          std::max(shift_draw - fixed_missing, 0.05 * static_cast<double>(extra));
      const auto extra_coords = sample_without_replacement(off_support, extra, eng);
      std::vector<double> raw(static_cast<size_t>(extra));
      double total = 0.0;
      for (auto& v : raw) {
        v = 0.5 + unit(eng);
        total += v;
      }
      for (int i = 0; i < extra; ++i) {
        const double magnitude = extra_mass * raw[static_cast<size_t>(i)] / total;
        beta_s.values[extra_coords[static_cast<size_t>(i)]] =
            unit(eng) < 0.5 ? magnitude : -magnitude;
      }
    }

    LabeledDataset src;
    src.id = "source_" + std::to_string(s + 1);
    src.kind = DatasetKind::source;
    src.design = gaussian_matrix(design.n_source, p, entry_sd, eng);
    Eigen::VectorXd eps_s(design.n_source);
    for (Eigen::Index i = 0; i < design.n_source; ++i) {
      eps_s[i] = design.noise_sd > 0 ? noise(eng) : 0.0;
    }
    src.response = src.design * beta_s.values + eps_s;

    inst.sources.push_back(std::move(src));
    inst.truth_source_betas.push_back(std::move(beta_s));
  }
  return inst;
}

std::string BenchmarkTable::to_csv() const {
  std::ostringstream out;
  out << "p,n_target,n_source,L,target_sparsity,r,noise_sd,shared_support,shift_lo,"
         "shift_hi,seed,method,reps,completed,mean_ser_db,se_ser_db,sign_rate,failures\n";
  for (const auto& c : cells) {
    out << c.design.p << ',' << c.design.n_target << ',' << c.design.n_source << ','
        << c.design.L << ',' << c.design.target_sparsity << ','
        << format_double(c.design.corruption_fraction) << ','
        << format_double(c.design.noise_sd) << ',' << c.design.shared_support_size << ','
        << format_double(c.design.shift_lo) << ',' << format_double(c.design.shift_hi)
        << ',' << c.design.seed << ',' << c.method << ',' << c.reps << ',' << c.completed
        << ',' << format_double(c.mean_ser_db) << ',' << format_double(c.se_ser_db)
        << ',' << format_double(c.sign_rate) << ',' << c.failures << '\n';
  }
  return out.str();
}

}  // namespace rtreg
