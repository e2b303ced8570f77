#include "rtreg/edsl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rtreg/csv.hpp"
#include "rtreg/errors.hpp"

namespace rtreg {

std::string EdslTrace::to_csv() const {
  std::ostringstream out;
  out << "round,lambda_t,l1_change\n";
  for (const auto& r : rounds) {
    out << r.round << ',' << format_double(r.lambda) << ','
        << format_double(r.l1_change) << '\n';
  }
  return out.str();
}

double edsl_lambda(const EdslConfig& config, Eigen::Index p, double sum_n,
                   double n_anchor, int s_hint, int t) {
  const double log_p = std::log(static_cast<double>(p));
  const double floor_term = config.c_lambda_1 * std::sqrt(log_p / sum_n);
  const double base = std::sqrt(log_p / n_anchor);
  const double ratio = config.c_lambda_2 * static_cast<double>(s_hint) * base;
  return floor_term + base * std::pow(ratio, t);
}

Eigen::VectorXd gradient(const LabeledDataset& dataset, const Eigen::VectorXd& beta) {
  if (beta.size() != dataset.cols()) {
    throw DimensionMismatch("gradient: beta length != p for dataset '" + dataset.id + "'");
  }
  const double n = static_cast<double>(dataset.rows());
  return -(dataset.design.transpose() * (dataset.response - dataset.design * beta)) / n;
}

namespace {

Eigen::Index resolve_anchor(const std::vector<Eigen::Index>& selected,
                            const EdslConfig& config,
                            const std::vector<double>& shift_hints) {
  switch (config.anchor_policy) {
    case AnchorPolicy::explicit_index: {
      if (std::find(selected.begin(), selected.end(), config.anchor_index) ==
          selected.end()) {
        throw ConfigError("edsl: explicit anchor " + std::to_string(config.anchor_index) +
                          " is not in the selected set");
      }
      return config.anchor_index;
    }
    case AnchorPolicy::min_shift: {
      Eigen::Index best = -1;
      double best_h = std::numeric_limits<double>::infinity();
      for (Eigen::Index j : selected) {
        if (j < 0 || static_cast<size_t>(j) >= shift_hints.size()) continue;
        const double hj = shift_hints[static_cast<size_t>(j)];
        if (std::isfinite(hj) && hj < best_h) {
          best_h = hj;
          best = j;
        }
      }
      return best >= 0 ? best : selected.front();  // no hints: fall back to first
    }
    case AnchorPolicy::first:
    default:
      return selected.front();
  }
}

}  // namespace

std::pair<SparseCoefficients, EdslTrace> edsl_aggregate(
    const std::vector<LabeledDataset>& sources, const std::vector<Eigen::Index>& selected,
    const EdslConfig& config, const SolverSettings& settings,
    const std::vector<double>& shift_hints) {
  if (selected.empty()) throw EmptySelection("edsl: selected source set is empty");
  const Eigen::Index p = sources.at(static_cast<size_t>(selected.front())).cols();
  double sum_n = 0.0;
  for (Eigen::Index j : selected) {
    const auto& src = sources.at(static_cast<size_t>(j));
    src.validate();
    if (src.cols() != p) {
      throw DimensionMismatch("edsl: source '" + src.id + "' does not share p");
    }
    sum_n += static_cast<double>(src.rows());
  }

  EdslTrace trace;
  trace.anchor = resolve_anchor(selected, config, shift_hints);
  const LabeledDataset& anchor = sources.at(static_cast<size_t>(trace.anchor));
  const double n_anchor = static_cast<double>(anchor.rows());

  trace.lambda_floor = config.c_lambda_1 *
                       std::sqrt(std::log(static_cast<double>(p)) / sum_n);
  trace.lambda0 = edsl_lambda(config, p, sum_n, n_anchor, 1, 0);  // t=0 term is s-free

  LassoProblem anchor_problem;
  anchor_problem.design = anchor.design;
  anchor_problem.response = anchor.response;
  anchor_problem.penalty = trace.lambda0;
  SparseCoefficients beta = lasso_fit(anchor_problem, settings);

  trace.s_hint_used =
      config.s_hint > 0 ? config.s_hint : std::max<int>(1, static_cast<int>(beta.nnz()));

  trace.stop_reason = "max_rounds";
  double lambda_prev = trace.lambda0;
  for (int t = 0; t < config.max_rounds; ++t) {
    const double lambda_next =
        edsl_lambda(config, p, sum_n, n_anchor, trace.s_hint_used, t + 1);
    if (lambda_next > lambda_prev) {
      // Non-contracting schedule (c2 * s * sqrt(log p / n) >= 1): further
      // rounds would only inflate the penalty.
      trace.stop_reason = "schedule_diverged";
      break;
    }

    // Averaged gradient over the selected set minus the anchor gradient,
    // reduced in ascending source order.
    Eigen::VectorXd mean_grad = Eigen::VectorXd::Zero(p);
    double denom = 0.0;
    for (Eigen::Index j : selected) {
      const auto& src = sources.at(static_cast<size_t>(j));
      const double w = config.weight_by_n ? static_cast<double>(src.rows()) : 1.0;
      mean_grad += w * gradient(src, beta.values);
      denom += w;
    }
    mean_grad /= denom;
    const Eigen::VectorXd correction = mean_grad - gradient(anchor, beta.values);

    anchor_problem.penalty = lambda_next;
    anchor_problem.linear_offset = correction;
    anchor_problem.warm_start = beta.values;
    SparseCoefficients next = lasso_fit(anchor_problem, settings);

    EdslRound round;
    round.round = t + 1;
    round.lambda = lambda_next;
    round.l1_change = (next.values - beta.values).lpNorm<1>();
    round.grad_correction_inf = correction.lpNorm<Eigen::Infinity>();
    round.surrogate_gap = lasso_objective(anchor_problem, beta.values) -
                          lasso_objective(anchor_problem, next.values);
    trace.rounds.push_back(round);

    beta = std::move(next);
    lambda_prev = lambda_next;

    const bool lambda_at_floor =
        lambda_next <= trace.lambda_floor * (1.0 + 1e-3);
    if (lambda_at_floor && round.l1_change <= settings.tol) {
      trace.stop_reason = "converged";
      break;
    }
  }

  return {std::move(beta), std::move(trace)};
}

}  // namespace rtreg
