#include "rtreg/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "rtreg/errors.hpp"

namespace rtreg {
namespace {

double median_abs_deviation(const Eigen::VectorXd& v) {
  std::vector<double> work(v.data(), v.data() + v.size());
  std::sort(work.begin(), work.end());
  const size_t n = work.size();
  const double med =
      n % 2 == 1 ? work[n / 2] : 0.5 * (work[n / 2 - 1] + work[n / 2]);
  for (size_t i = 0; i < n; ++i) work[i] = std::abs(work[i] - med);
  std::sort(work.begin(), work.end());
  return n % 2 == 1 ? work[n / 2] : 0.5 * (work[n / 2 - 1] + work[n / 2]);
}

// Deterministic engine-independent Fisher-Yates so fold membership does not
// depend on the standard library's shuffle implementation.
void shuffle_indices(std::vector<Eigen::Index>& idx, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  for (size_t i = idx.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(eng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

LabeledDataset subset_rows(const LabeledDataset& data,
                           const std::vector<Eigen::Index>& rows) {
  LabeledDataset out;
  out.id = data.id;
  out.kind = data.kind;
  out.design.resize(static_cast<Eigen::Index>(rows.size()), data.cols());
  out.response.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    out.design.row(static_cast<Eigen::Index>(i)) = data.design.row(rows[i]);
    out.response[static_cast<Eigen::Index>(i)] = data.response[rows[i]];
  }
  return out;
}

}  // namespace

std::pair<SparseCoefficients, CorruptionVector> merged_robust_fit(
    const LabeledDataset& target, const LabeledDataset& source, double lambda_beta,
    double lambda_e, const SolverSettings& settings) {
  if (target.cols() != source.cols()) {
    throw DimensionMismatch("merged_robust_fit: '" + source.id +
                            "' does not share p with the target");
  }
  RobustLassoProblem pb;
  const Eigen::Index n = source.rows() + target.rows();
  pb.design.resize(n, target.cols());
  pb.design.topRows(source.rows()) = source.design;
  pb.design.bottomRows(target.rows()) = target.design;
  pb.response.resize(n);
  pb.response.head(source.rows()) = source.response;
  pb.response.tail(target.rows()) = target.response;
  pb.lambda_beta = lambda_beta;
  pb.lambda_e = lambda_e;
  return robust_lasso_fit(pb, settings);
}

std::vector<ShiftEstimate> estimate_shifts(const LabeledDataset& target,
                                           const std::vector<LabeledDataset>& sources,
                                           const ShiftPenalties& penalties,
                                           const SolverSettings& settings) {
  if (sources.empty()) throw EmptySelection("estimate_shifts: no sources");
  const double n0 = static_cast<double>(target.rows());
  const double log_p = std::log(static_cast<double>(target.cols()));

  std::vector<ShiftEstimate> table;
  table.reserve(sources.size());
  size_t failures = 0;
  std::string first_error;
  for (size_t j = 0; j < sources.size(); ++j) {
    const auto& src = sources[j];
    ShiftEstimate row;
    row.source_index = static_cast<Eigen::Index>(j);
    try {
      const double nj = static_cast<double>(src.rows());
      const double n_tot = n0 + nj;
      const double lb = penalties.lambda_beta > 0
                            ? penalties.lambda_beta
                            : penalties.sigma_hat * std::sqrt(log_p / n_tot);
      const double le = penalties.lambda_e > 0
                            ? penalties.lambda_e
                            : penalties.sigma_hat * std::sqrt(2.0 * std::log(n_tot) / n_tot);
      const double ls = penalties.lambda_solo > 0
                            ? penalties.lambda_solo
                            : 2.0 * penalties.sigma_hat * std::sqrt(log_p / nj);

      LassoProblem solo;
      solo.design = src.design;
      solo.response = src.response;
      solo.penalty = ls;
      row.solo_fit = lasso_fit(solo, settings);
      row.merged_fit = merged_robust_fit(target, src, lb, le, settings).first;
      row.h_hat = 2.0 * (row.merged_fit.values - row.solo_fit.values).lpNorm<1>();
    } catch (const std::exception& ex) {
      row.failed = true;
      row.error = ex.what();
      if (failures++ == 0) first_error = ex.what();
    }
    table.push_back(std::move(row));
  }
  if (failures == sources.size()) {
    throw Error("estimate_shifts: every source failed; first error: " + first_error);
  }
  return table;
}

SelectionResult sds_select(const std::vector<ShiftEstimate>& shift_table, double h,
                           Eigen::Index A_cap) {
  if (shift_table.empty()) throw EmptySelection("sds_select: empty shift table");

  SelectionResult result;
  result.shift_table = shift_table;

  std::vector<size_t> order;
  for (size_t i = 0; i < shift_table.size(); ++i) {
    if (!shift_table[i].failed) order.push_back(i);
  }
  if (order.empty()) throw EmptySelection("sds_select: every shift estimate failed");

  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (shift_table[a].h_hat != shift_table[b].h_hat) {
      return shift_table[a].h_hat < shift_table[b].h_hat;
    }
    return shift_table[a].source_index < shift_table[b].source_index;
  });

  result.validation_index = shift_table[order.front()].source_index;

  const size_t cap = A_cap < 0 ? order.size()
                               : std::min<size_t>(order.size(), static_cast<size_t>(A_cap));
  for (size_t k = 0; k < cap; ++k) {
    const auto& row = shift_table[order[k]];
    if (row.h_hat <= h) result.selected.push_back(row.source_index);
  }
  std::sort(result.selected.begin(), result.selected.end());
  return result;
}

PilotFit pilot_robust_fit(const LabeledDataset& target, const SolverSettings& settings,
                          double C_tilde, std::uint64_t seed) {
  target.validate();
  const Eigen::Index n = target.rows();
  const double n_d = static_cast<double>(n);
  const double log_p = std::log(static_cast<double>(target.cols()));
  // lambda_e / lambda_beta at the noise-free ratio of the two theory scales
  // (2 sigma sqrt(2 log n / n)) / (2 sigma sqrt(log p / n)); tying them makes
  // the whole path pivotal in sigma.
  const double e_ratio = std::sqrt(2.0 * std::log(n_d)) / std::sqrt(log_p);

  // Sigma-free tuning: a sigma -> penalty -> residual-MAD fixed-point
  // iteration stalls whenever the initial over-estimate zeroes the fit (the
  // empty fit reproduces the same scale), so the penalty level is chosen by
  // corruption-trimmed cross-validation along a fixed path instead, and the
  // noise scale is read off the selected fit afterwards.
  const double lambda_beta_max =
      (target.design.transpose() * target.response).lpNorm<Eigen::Infinity>() / n_d;
  // Floor at lambda_max/50: below that the augmented program approaches
  // interpolation and coordinate descent crawls; CV never picks that end.
  const int path_len = 12;
  std::vector<double> path(path_len);
  for (int i = 0; i < path_len; ++i) {
    path[static_cast<size_t>(i)] =
        lambda_beta_max * std::pow(0.02, static_cast<double>(i) / (path_len - 1));
  }

  const int k0 = n >= 10 ? 5 : 2;
  const auto folds = kfold_split(n, k0, seed);
  SolverSettings fold_settings = settings;
  fold_settings.tol = std::max(settings.tol, 1e-5);
  fold_settings.max_iters = std::min(settings.max_iters, 3000);

  // Each row is held out exactly once; the path point is scored by the
  // 0.25-quantile of the held-out squared residuals. The low quantile makes
  // the score indifferent to corrupted rows (up to 75% of them) without any
  // trimming rule a degenerate path point could game.
  std::vector<std::vector<double>> heldout_sq(path.size(),
                                              std::vector<double>(static_cast<size_t>(n), 0.0));
  std::vector<std::vector<bool>> ok(path.size(), std::vector<bool>(folds.size(), false));

  for (size_t f = 0; f < folds.size(); ++f) {
    std::vector<bool> held(static_cast<size_t>(n), false);
    for (Eigen::Index i : folds[f]) held[static_cast<size_t>(i)] = true;
    std::vector<Eigen::Index> train;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!held[static_cast<size_t>(i)]) train.push_back(i);
    }
    const LabeledDataset sub = subset_rows(target, train);

    RobustLassoProblem pb;
    pb.design = sub.design;
    pb.response = sub.response;
    Eigen::VectorXd warm_b, warm_e;
    for (size_t li = 0; li < path.size(); ++li) {
      pb.lambda_beta = path[li];
      pb.lambda_e = path[li] * e_ratio;
      pb.warm_beta = warm_b;
      pb.warm_e = warm_e;
      try {
        auto [beta, e] = robust_lasso_fit(pb, fold_settings);
        warm_b = beta.values;
        warm_e = e.values;
        ok[li][f] = true;
        for (Eigen::Index i : folds[f]) {
          const double r = target.response[i] - target.design.row(i).dot(beta.values);
          heldout_sq[li][static_cast<size_t>(i)] = r * r;
        }
      } catch (const NotConverged&) {
        break;  // this and smaller path points sit next to interpolation
      }
    }
  }

  size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (size_t li = 0; li < path.size(); ++li) {
    bool all_ok = true;
    for (size_t f = 0; f < folds.size(); ++f) all_ok = all_ok && ok[li][f];
    if (!all_ok) continue;
    std::vector<double> sq = heldout_sq[li];
    const size_t q = sq.size() / 4;
    std::nth_element(sq.begin(), sq.begin() + static_cast<long>(q), sq.end());
    const double score = sq[q];
    if (score < best_score) {
      best_score = score;
      best = li;
    }
  }

  PilotFit pilot;
  RobustLassoProblem full;
  full.design = target.design;
  full.response = target.response;
  full.lambda_beta = path[best];
  full.lambda_e = path[best] * e_ratio;
  auto [beta, e] = robust_lasso_fit(full, settings);
  pilot.beta = std::move(beta);
  pilot.e = std::move(e);
  pilot.lambda_beta = full.lambda_beta;
  pilot.lambda_e = full.lambda_e;
  pilot.iterations = static_cast<int>(best) + 1;

  // Noise scale from the clean rows of the selected fit.
  const Eigen::VectorXd residual = target.response - target.design * pilot.beta.values -
                                   std::sqrt(n_d) * pilot.e.values;
  std::vector<double> clean;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pilot.e.values[i] == 0.0) clean.push_back(residual[i]);
  }
  double sigma = 0.0;
  if (clean.size() >= 2) {
    Eigen::VectorXd cv = Eigen::Map<Eigen::VectorXd>(
        clean.data(), static_cast<Eigen::Index>(clean.size()));
    sigma = 1.4826 * median_abs_deviation(cv);
  }
  if (sigma <= 0.0) {
    sigma = std::max(1.4826 * median_abs_deviation(residual), 1e-10);
  }
  pilot.sigma = {sigma, "mad_clean_rows"};

  const double detect = C_tilde * std::sqrt(std::log(n_d) / n_d);
  pilot.corruption_count = 0;
  for (Eigen::Index i = 0; i < pilot.e.size(); ++i) {
    pilot.corruption_count += std::abs(pilot.e.values[i]) >= detect;
  }
  return pilot;
}

int estimate_corruption_count(const LabeledDataset& target,
                              const SolverSettings& settings, double C_tilde,
                              std::uint64_t seed) {
  return pilot_robust_fit(target, settings, C_tilde, seed).corruption_count;
}

std::vector<double> TuningGrid::resolve_delta(double sigma_hat, Eigen::Index n0,
                                              Eigen::Index p) const {
  if (!delta_values.empty()) return delta_values;
  const double base =
      sigma_hat * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n0));
  std::vector<double> out;
  out.reserve(delta_multipliers.size());
  for (double m : delta_multipliers) out.push_back(m * base);
  return out;
}

std::vector<double> TuningGrid::resolve_e(double sigma_hat, Eigen::Index n0) const {
  if (!e_values.empty()) return e_values;
  const double n = static_cast<double>(n0);
  const double base = sigma_hat * std::sqrt(2.0 * std::log(n) / n);
  std::vector<double> out;
  out.reserve(e_multipliers.size());
  for (double m : e_multipliers) out.push_back(m * base);
  return out;
}

std::vector<std::vector<Eigen::Index>> kfold_split(Eigen::Index n, int k0,
                                                   std::uint64_t seed) {
  if (k0 < 2 || static_cast<Eigen::Index>(k0) > n) {
    throw BadFoldCount("kfold_split: need 2 <= k0 <= n, got k0=" + std::to_string(k0) +
                       ", n=" + std::to_string(n));
  }
  std::vector<Eigen::Index> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  shuffle_indices(idx, seed);

  std::vector<std::vector<Eigen::Index>> folds(static_cast<size_t>(k0));
  const Eigen::Index base = n / k0;
  const Eigen::Index extra = n % k0;
  size_t next = 0;
  for (int f = 0; f < k0; ++f) {
    const Eigen::Index size = base + (f < extra ? 1 : 0);
    auto& fold = folds[static_cast<size_t>(f)];
    fold.assign(idx.begin() + static_cast<long>(next),
                idx.begin() + static_cast<long>(next + static_cast<size_t>(size)));
    std::sort(fold.begin(), fold.end());
    next += static_cast<size_t>(size);
  }
  return folds;
}

namespace {

double validation_loss(const LabeledDataset& v, const Eigen::VectorXd& beta) {
  const double nv = static_cast<double>(v.rows());
  return (v.response - v.design * beta).squaredNorm() / (2.0 * nv);
}

}  // namespace

AhtDecision aht_tune(const LabeledDataset& target,
                     const std::vector<LabeledDataset>& sources,
                     const std::vector<Eigen::Index>& selected,
                     Eigen::Index validation_index,
                     const SparseCoefficients& beta_source, const TuningGrid& grid,
                     const AhtParams& params, int corruption_count, double sigma_hat,
                     double lambda_t_final, const CorruptionVector& pilot_corruption,
                     const SolverSettings& settings) {
  (void)selected;  // part of the call contract; both branches key off v / folds
  const Eigen::Index n0 = target.rows();
  const Eigen::Index p = target.cols();
  const std::vector<double> deltas = grid.resolve_delta(sigma_hat, n0, p);
  const std::vector<double> es = grid.resolve_e(sigma_hat, n0);
  if (deltas.empty() || es.empty()) throw EmptyGrid("aht_tune: empty hyperparameter grid");

  AhtDecision decision;
  decision.corruption_count_estimate = corruption_count;
  decision.branch = corruption_count > params.c_h ? AhtBranch::validation_based
                                                  : AhtBranch::cross_validation;

  // Shift budget: the Delta step has to undo the aggregate's penalty bias
  // (about |supp| * lambda_t of l1 mass) before any genuine shift.
  const double s_src = static_cast<double>(std::max<Eigen::Index>(beta_source.nnz(), 1));
  decision.c_tilde_used =
      params.c_tilde >= 0.0
          ? params.c_tilde
          : s_src * lambda_t_final +
                4.0 * sigma_hat *
                    std::sqrt(s_src * std::log(static_cast<double>(p)) /
                              static_cast<double>(n0));

  // Overfit grid corners can sit next to interpolation where coordinate
  // descent crawls; those points only exist to be rejected, so grid
  // evaluation runs at a relaxed tolerance and a stalled fit scores +inf.
  SolverSettings grid_settings = settings;
  grid_settings.tol = std::max(settings.tol, 1e-5);
  grid_settings.max_iters = std::min(settings.max_iters, 3000);

  if (decision.branch == AhtBranch::validation_based) {
    if (validation_index < 0 ||
        static_cast<size_t>(validation_index) >= sources.size()) {
      throw ConfigError("aht_tune: validation branch needs a valid source index");
    }
    const LabeledDataset& v = sources[static_cast<size_t>(validation_index)];

    int best = -1, best_infeasible = -1;
    for (double ld : deltas) {
      for (double le : es) {
        AhtScore s;
        s.lambda_delta = ld;
        s.lambda_e = le;
        try {
          auto [delta, e] = fit_delta(target, beta_source, ld, le, grid_settings);
          s.delta_l1 = delta.l1();
          s.feasible = s.delta_l1 <= decision.c_tilde_used;
          s.score = validation_loss(v, beta_source.values + delta.values);
        } catch (const NotConverged&) {
          s.feasible = false;
          s.score = std::numeric_limits<double>::infinity();
          s.delta_l1 = std::numeric_limits<double>::infinity();
        }
        decision.score_table.push_back(s);
        const int idx = static_cast<int>(decision.score_table.size()) - 1;
        if (s.feasible) {
          if (best < 0 || s.score < decision.score_table[static_cast<size_t>(best)].score) {
            best = idx;
          }
        }
        if (best_infeasible < 0 ||
            s.delta_l1 <
                decision.score_table[static_cast<size_t>(best_infeasible)].delta_l1) {
          best_infeasible = idx;
        }
      }
    }
    int chosen = best >= 0 ? best : best_infeasible;
    if (chosen < 0 ||
        !std::isfinite(decision.score_table[static_cast<size_t>(chosen)].delta_l1)) {
      chosen = static_cast<int>(decision.score_table.size()) - 1;  // largest pair
    }
    decision.feasibility_fallback = best < 0;
    decision.lambda_delta = decision.score_table[static_cast<size_t>(chosen)].lambda_delta;
    decision.lambda_e = decision.score_table[static_cast<size_t>(chosen)].lambda_e;
    return decision;
  }

  // Cross-validation branch on the target.
  const auto folds = kfold_split(n0, params.k0, params.seed);
  std::vector<std::vector<Eigen::Index>> train_rows(folds.size());
  for (size_t f = 0; f < folds.size(); ++f) {
    std::vector<bool> held(static_cast<size_t>(n0), false);
    for (Eigen::Index i : folds[f]) held[static_cast<size_t>(i)] = true;
    for (Eigen::Index i = 0; i < n0; ++i) {
      if (!held[static_cast<size_t>(i)]) train_rows[f].push_back(i);
    }
  }
  std::vector<LabeledDataset> train_data;
  train_data.reserve(folds.size());
  for (const auto& rows : train_rows) train_data.push_back(subset_rows(target, rows));

  // Rows the pilot flagged as corrupted are dropped from every pair's score.
  // The flag set must not depend on the pair being scored, or a small
  // lambda_e gets rewarded for absorbing exactly the rows it fits worst.
  std::vector<bool> flagged(static_cast<size_t>(n0), false);
  if (pilot_corruption.size() == n0) {
    for (Eigen::Index i = 0; i < n0; ++i) {
      flagged[static_cast<size_t>(i)] = pilot_corruption.values[i] != 0.0;
    }
  }

  int best = -1;
  for (double ld : deltas) {
    for (double le : es) {
      double loss = 0.0;
      Eigen::Index kept = 0;
      double delta_l1_sum = 0.0;
      bool stalled = false;
      for (size_t f = 0; f < folds.size() && !stalled; ++f) {
        SparseCoefficients delta;
        try {
          CorruptionVector e;
          std::tie(delta, e) =
              fit_delta(train_data[f], beta_source, ld, le, grid_settings);
        } catch (const NotConverged&) {
          stalled = true;
          break;
        }
        delta_l1_sum += delta.l1();
        const Eigen::VectorXd beta = beta_source.values + delta.values;
        for (Eigen::Index i : folds[f]) {
          if (flagged[static_cast<size_t>(i)]) continue;
          const double r = target.response[i] - target.design.row(i).dot(beta);
          loss += r * r;
          ++kept;
        }
      }
      AhtScore s;
      s.lambda_delta = ld;
      s.lambda_e = le;
      s.delta_l1 = delta_l1_sum / static_cast<double>(folds.size());
      s.score = !stalled && kept > 0 ? loss / (2.0 * static_cast<double>(kept))
                                     : std::numeric_limits<double>::infinity();
      decision.score_table.push_back(s);
      const int idx = static_cast<int>(decision.score_table.size()) - 1;
      if (best < 0 || s.score < decision.score_table[static_cast<size_t>(best)].score) {
        best = idx;
      }
    }
  }
  if (!std::isfinite(decision.score_table[static_cast<size_t>(best)].score)) {
    best = static_cast<int>(decision.score_table.size()) - 1;  // largest pair
  }
  decision.lambda_delta = decision.score_table[static_cast<size_t>(best)].lambda_delta;
  decision.lambda_e = decision.score_table[static_cast<size_t>(best)].lambda_e;
  return decision;
}

}  // namespace rtreg
