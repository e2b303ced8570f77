#include "rtreg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "rtreg/diagnostics.hpp"
#include "rtreg/errors.hpp"

namespace rtreg {
namespace {

std::vector<Eigen::Index> true_low_shift_set(const SimInstance& inst, double h) {
  std::vector<Eigen::Index> out;
  for (size_t j = 0; j < inst.sources.size(); ++j) {
    if (inst.true_shift_l1(j) <= h) out.push_back(static_cast<Eigen::Index>(j));
  }
  if (out.empty() && !inst.sources.empty()) {
    // Degenerate oracle set: keep the least-shifted source.
    size_t best = 0;
    for (size_t j = 1; j < inst.sources.size(); ++j) {
      if (inst.true_shift_l1(j) < inst.true_shift_l1(best)) best = j;
    }
    out.push_back(static_cast<Eigen::Index>(best));
  }
  return out;
}

MethodScore score_estimate(const SimInstance& inst, const Eigen::VectorXd& estimate,
                           const CorruptionVector& est_e) {
  MethodScore score;
  const SerScore ser = ser_db(inst.truth_beta.values, estimate);
  score.ser_db = ser.value_db;
  score.ser_infinite = ser.infinite;
  score.sign_match = recovery_score(inst.truth_beta, SparseCoefficients(estimate),
                                    inst.truth_e, est_e)
                         .sign_match;
  return score;
}

}  // namespace

SparseCoefficients lasso_cv_baseline(const LabeledDataset& target, int k0,
                                     std::uint64_t seed, const SolverSettings& settings) {
  auto [std_target, record] = standardize(target);
  const Eigen::Index n = std_target.rows();
  const double n_d = static_cast<double>(n);

  const double lambda_max =
      (std_target.design.transpose() * std_target.response).lpNorm<Eigen::Infinity>() / n_d;
  const int path_len = 20;
  std::vector<double> path(path_len);
  for (int i = 0; i < path_len; ++i) {
    path[static_cast<size_t>(i)] =
        lambda_max * std::pow(1e-3, static_cast<double>(i) / (path_len - 1));
  }

  const auto folds = kfold_split(n, k0, seed);
  std::vector<double> cv_loss(path.size(), 0.0);
  for (const auto& fold : folds) {
    std::vector<bool> held(static_cast<size_t>(n), false);
    for (Eigen::Index i : fold) held[static_cast<size_t>(i)] = true;

    LassoProblem train;
    train.design.resize(n - static_cast<Eigen::Index>(fold.size()), std_target.cols());
    train.response.resize(train.design.rows());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (held[static_cast<size_t>(i)]) continue;
      train.design.row(r) = std_target.design.row(i);
      train.response[r] = std_target.response[i];
      ++r;
    }

    Eigen::VectorXd warm;
    for (size_t li = 0; li < path.size(); ++li) {
      train.penalty = path[li];
      train.warm_start = warm;
      const SparseCoefficients beta = lasso_fit(train, settings);
      warm = beta.values;
      for (Eigen::Index i : fold) {
        const double rres = std_target.response[i] - std_target.design.row(i).dot(beta.values);
        cv_loss[li] += rres * rres;
      }
    }
  }

  size_t best = 0;
  for (size_t li = 1; li < path.size(); ++li) {
    if (cv_loss[li] < cv_loss[best]) best = li;
  }

  LassoProblem full;
  full.design = std_target.design;
  full.response = std_target.response;
  full.penalty = path[best];
  const SparseCoefficients beta = lasso_fit(full, settings);
  return SparseCoefficients(record.coefficients_to_original(beta.values));
}

MethodScore run_method(const std::string& method, const SimInstance& inst,
                       const PipelineConfig& base_config, std::uint64_t rep_seed) {
  PipelineConfig config = base_config;
  config.seed = rep_seed;

  if (method == "lasso") {
    const SparseCoefficients beta = lasso_cv_baseline(
        inst.target, config.aht.k0, rep_seed, config.solver);
    return score_estimate(inst, beta.values, CorruptionVector::zeros(inst.target.rows()));
  }
  if (method == "rlasso") {
    auto [std_target, record] = standardize(inst.target);
    const PilotFit pilot =
        pilot_robust_fit(std_target, config.solver, config.aht.C_tilde, rep_seed);
    return score_estimate(inst, record.coefficients_to_original(pilot.beta.values),
                          pilot.e);
  }
  if (method == "rtl") {
    const FitReport report = run_rtl(inst.target, inst.sources, config);
    return score_estimate(inst, report.transfer.beta_thresholded.values,
                          report.transfer.corruption);
  }
  if (method == "oracle") {
    std::vector<double> shifts;
    shifts.reserve(inst.sources.size());
    for (size_t j = 0; j < inst.sources.size(); ++j) shifts.push_back(inst.true_shift_l1(j));
    const FitReport report = run_oracle(inst.target, inst.sources,
                                        true_low_shift_set(inst, config.h), config, shifts);
    return score_estimate(inst, report.transfer.beta_thresholded.values,
                          report.transfer.corruption);
  }
  throw ConfigError("unknown method tag '" + method + "'");
}

BenchmarkTable sweep(const std::vector<SimDesign>& designs,
                     const std::vector<std::string>& methods, int reps,
                     const PipelineConfig& base_config, int jobs,
                     const std::function<void(size_t, const BenchmarkCell&)>& on_cell_done,
                     const std::function<bool(size_t, const std::string&, BenchmarkCell&)>&
                         resume_lookup) {
  if (reps < 1) throw ConfigError("sweep: reps must be >= 1");
  if (designs.empty()) throw ConfigError("sweep: no designs");
  if (methods.empty()) throw ConfigError("sweep: no methods");
  jobs = std::max(1, jobs);

  BenchmarkTable table;
  for (size_t di = 0; di < designs.size(); ++di) {
    const SimDesign& design = designs[di];
    design.validate();
    for (const std::string& method : methods) {
      BenchmarkCell cell;
      cell.design = design;
      cell.method = method;
      cell.reps = reps;
      if (resume_lookup && resume_lookup(di, method, cell)) {
        table.cells.push_back(cell);
        continue;
      }

      struct RepOutcome {
        MethodScore score;
        bool failed = false;
        std::string error;
      };
      std::vector<RepOutcome> outcomes(static_cast<size_t>(reps));

      std::atomic<int> next{0};
      auto worker = [&] {
        while (true) {
          const int rep = next.fetch_add(1);
          if (rep >= reps) return;
          auto& out = outcomes[static_cast<size_t>(rep)];
          try {
            SimDesign d = design;
            d.seed = derive_seed(design.seed, di, static_cast<std::uint64_t>(rep));
            const SimInstance inst = generate(d);
            out.score = run_method(method, inst, base_config, d.seed);
          } catch (const std::exception& ex) {
            out.failed = true;
            out.error = ex.what();
          }
        }
      };
      if (jobs == 1) {
        worker();
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
      }

      // Deterministic aggregation in rep order.
      double sum = 0.0, sum_sq = 0.0;
      int n_ok = 0, n_sign = 0;
      for (const auto& out : outcomes) {
        if (out.failed) {
          ++cell.failures;
          if (cell.first_error.empty()) cell.first_error = out.error;
          continue;
        }
        if (out.score.ser_infinite) continue;  // exact recovery; no finite dB
        sum += out.score.ser_db;
        sum_sq += out.score.ser_db * out.score.ser_db;
        n_sign += out.score.sign_match;
        ++n_ok;
      }
      cell.completed = n_ok;
      if (n_ok > 0) {
        cell.mean_ser_db = sum / n_ok;
        const double var =
            n_ok > 1 ? std::max(0.0, (sum_sq - sum * sum / n_ok) / (n_ok - 1)) : 0.0;
        cell.se_ser_db = std::sqrt(var / n_ok);
        cell.sign_rate = static_cast<double>(n_sign) / n_ok;
      }
      table.cells.push_back(cell);
      if (on_cell_done) on_cell_done(di, table.cells.back());
    }
  }
  return table;
}

}  // namespace rtreg
