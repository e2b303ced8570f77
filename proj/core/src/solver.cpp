#include "rtreg/solver.hpp"

#include <cmath>
#include <vector>

#include "rtreg/errors.hpp"

namespace rtreg {
namespace {

// One solver engine covers both programs. The robust problem is the same
// objective with n extra coordinates whose design columns are sqrt(n) e_i;
// those columns have unit curvature and touch a single residual entry, so
// they get a dedicated update instead of a materialized identity block.
struct Workspace {
  const Eigen::MatrixXd& X;
  Eigen::VectorXd y;              // response minus X * beta_offset
  double lambda_beta;
  double lambda_e;                // robust only
  const Eigen::VectorXd* offset;  // nullable
  const Eigen::VectorXd* weights; // nullable
  bool robust;

  Eigen::Index n, p;
  double sqrt_n;
  Eigen::VectorXd col_curv;  // ||X_j||^2 / n

  Eigen::VectorXd beta, e, residual;

  Workspace(const Eigen::MatrixXd& X_, Eigen::VectorXd y_, double lb, double le,
            const Eigen::VectorXd* off, const Eigen::VectorXd* w, bool robust_)
      : X(X_), y(std::move(y_)), lambda_beta(lb), lambda_e(le), offset(off),
        weights(w), robust(robust_), n(X_.rows()), p(X_.cols()),
        sqrt_n(std::sqrt(static_cast<double>(n))) {
    col_curv = X.colwise().squaredNorm() / static_cast<double>(n);
    beta = Eigen::VectorXd::Zero(p);
    e = Eigen::VectorXd::Zero(robust ? n : 0);
  }

  double weight(Eigen::Index j) const { return weights ? (*weights)[j] : 1.0; }
  double offset_at(Eigen::Index j) const { return offset ? (*offset)[j] : 0.0; }

  void refresh_residual() {
    residual = y - X * beta;
    if (robust) residual -= sqrt_n * e;
  }

  double objective() const {
    double obj = residual.squaredNorm() / (2.0 * static_cast<double>(n));
    if (offset) obj += offset->dot(beta);
    for (Eigen::Index j = 0; j < p; ++j) obj += lambda_beta * weight(j) * std::abs(beta[j]);
    if (robust) obj += lambda_e * e.lpNorm<1>();
    return obj;
  }

  // Returns |update| in beta units.
  double update_beta(Eigen::Index j) {
    const double curv = col_curv[j];
    if (curv <= 0.0) return 0.0;  // zero column: pinned at 0
    const double old = beta[j];
    const double rho =
        X.col(j).dot(residual) / static_cast<double>(n) + curv * old - offset_at(j);
    const double next = soft_threshold(rho, lambda_beta * weight(j)) / curv;
    if (next != old) {
      residual += X.col(j) * (old - next);
      beta[j] = next;
    }
    return std::abs(next - old);
  }

  double update_e(Eigen::Index i) {
    const double old = e[i];
    const double rho = residual[i] / sqrt_n + old;
    const double next = soft_threshold(rho, lambda_e);
    if (next != old) {
      residual[i] += sqrt_n * (old - next);
      e[i] = next;
    }
    return std::abs(next - old);
  }

  double kkt() const {
    double worst = 0.0;
    const Eigen::VectorXd grad = -(X.transpose() * residual) / static_cast<double>(n);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double g = grad[j] + offset_at(j);
      const double lam = lambda_beta * weight(j);
      const double v = beta[j] != 0.0 ? std::abs(g + lam * (beta[j] > 0 ? 1.0 : -1.0))
                                      : std::max(0.0, std::abs(g) - lam);
      worst = std::max(worst, v);
    }
    if (robust) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double g = -residual[i] / sqrt_n;
        const double v = e[i] != 0.0 ? std::abs(g + lambda_e * (e[i] > 0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(g) - lambda_e);
        worst = std::max(worst, v);
      }
    }
    return worst;
  }
};

void run_cd(Workspace& ws, const SolverSettings& settings) {
  ws.refresh_residual();

  std::vector<Eigen::Index> active_beta;
  std::vector<Eigen::Index> active_e;
  auto collect_active = [&] {
    active_beta.clear();
    active_e.clear();
    for (Eigen::Index j = 0; j < ws.p; ++j) {
      if (ws.beta[j] != 0.0) active_beta.push_back(j);
    }
    for (Eigen::Index i = 0; i < (ws.robust ? ws.n : 0); ++i) {
      if (ws.e[i] != 0.0) active_e.push_back(i);
    }
  };

  double prev_obj = ws.objective();
  int sweeps = 0;
  int since_refresh = 0;
  auto after_sweep = [&]() -> bool {  // returns false when budget is spent
    ++sweeps;
    if (++since_refresh >= 64) {  // kill accumulated residual drift
      ws.refresh_residual();
      since_refresh = 0;
    }
    const double obj = ws.objective();
    if (obj > prev_obj + 1e-9 * (1.0 + std::abs(prev_obj))) {
      throw Error("coordinate descent objective increased within a sweep");
    }
    prev_obj = obj;
    return sweeps < settings.max_iters;
  };

  while (true) {
    // Full pass over every coordinate.
    for (Eigen::Index j = 0; j < ws.p; ++j) ws.update_beta(j);
    if (ws.robust) {
      for (Eigen::Index i = 0; i < ws.n; ++i) ws.update_e(i);
    }
    const bool budget = after_sweep();
    ws.refresh_residual();
    since_refresh = 0;
    if (ws.kkt() <= settings.tol) return;
    if (!budget) {
      throw NotConverged(sweeps, ws.kkt(), ws.beta, ws.e);
    }

    if (!settings.active_set) continue;

    // Inner sweeps restricted to the current support.
    collect_active();
    if (active_beta.empty() && active_e.empty()) continue;
    while (true) {
      double change = 0.0;
      for (Eigen::Index j : active_beta) change = std::max(change, ws.update_beta(j));
      for (Eigen::Index i : active_e) change = std::max(change, ws.update_e(i));
      const bool more = after_sweep();
      if (change <= 0.1 * settings.tol) break;
      if (!more) {
        ws.refresh_residual();
        throw NotConverged(sweeps, ws.kkt(), ws.beta, ws.e);
      }
    }
  }
}

void check_lasso(const LassoProblem& pb) {
  if (pb.design.rows() != pb.response.size()) {
    throw DimensionMismatch("lasso: design rows != response length");
  }
  if (pb.penalty < 0.0) throw ConfigError("lasso: penalty must be >= 0");
  if (pb.linear_offset.size() != 0 && pb.linear_offset.size() != pb.cols()) {
    throw DimensionMismatch("lasso: linear_offset length != p");
  }
  if (pb.weights.size() != 0 && pb.weights.size() != pb.cols()) {
    throw DimensionMismatch("lasso: weights length != p");
  }
}

void check_robust(const RobustLassoProblem& pb) {
  if (pb.design.rows() != pb.response.size()) {
    throw DimensionMismatch("robust lasso: design rows != response length");
  }
  if (pb.lambda_beta < 0.0 || pb.lambda_e < 0.0) {
    throw ConfigError("robust lasso: penalties must be >= 0");
  }
  if (pb.beta_offset && pb.beta_offset->size() != pb.cols()) {
    throw DimensionMismatch("robust lasso: beta_offset length != p");
  }
}

Eigen::VectorXd robust_working_response(const RobustLassoProblem& pb) {
  if (!pb.beta_offset) return pb.response;
  return pb.response - pb.design * (*pb.beta_offset);
}

}  // namespace

SparseCoefficients lasso_fit(const LassoProblem& problem, const SolverSettings& settings) {
  check_lasso(problem);
  const Eigen::VectorXd* off =
      problem.linear_offset.size() ? &problem.linear_offset : nullptr;
  const Eigen::VectorXd* w = problem.weights.size() ? &problem.weights : nullptr;
  Workspace ws(problem.design, problem.response, problem.penalty, 0.0, off, w, false);
  if (problem.warm_start.size() == problem.cols()) ws.beta = problem.warm_start;
  run_cd(ws, settings);
  return SparseCoefficients(std::move(ws.beta));
}

std::pair<SparseCoefficients, CorruptionVector> robust_lasso_fit(
    const RobustLassoProblem& problem, const SolverSettings& settings) {
  check_robust(problem);
  Workspace ws(problem.design, robust_working_response(problem), problem.lambda_beta,
               problem.lambda_e, nullptr, nullptr, true);
  if (problem.warm_beta.size() == problem.cols()) ws.beta = problem.warm_beta;
  if (problem.warm_e.size() == problem.rows()) ws.e = problem.warm_e;
  run_cd(ws, settings);
  return {SparseCoefficients(std::move(ws.beta)), CorruptionVector(std::move(ws.e))};
}

double kkt_residual(const LassoProblem& problem, const Eigen::VectorXd& beta) {
  check_lasso(problem);
  if (beta.size() != problem.cols()) {
    throw DimensionMismatch("kkt_residual: beta length != p");
  }
  const Eigen::VectorXd* off =
      problem.linear_offset.size() ? &problem.linear_offset : nullptr;
  const Eigen::VectorXd* w = problem.weights.size() ? &problem.weights : nullptr;
  Workspace ws(problem.design, problem.response, problem.penalty, 0.0, off, w, false);
  ws.beta = beta;
  ws.refresh_residual();
  return ws.kkt();
}

double kkt_residual(const RobustLassoProblem& problem, const Eigen::VectorXd& beta,
                    const Eigen::VectorXd& e) {
  check_robust(problem);
  if (beta.size() != problem.cols() || e.size() != problem.rows()) {
    throw DimensionMismatch("kkt_residual: candidate lengths do not match");
  }
  Workspace ws(problem.design, robust_working_response(problem), problem.lambda_beta,
               problem.lambda_e, nullptr, nullptr, true);
  ws.beta = beta;
  ws.e = e;
  ws.refresh_residual();
  return ws.kkt();
}

double lasso_objective(const LassoProblem& problem, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd* off =
      problem.linear_offset.size() ? &problem.linear_offset : nullptr;
  const Eigen::VectorXd* w = problem.weights.size() ? &problem.weights : nullptr;
  Workspace ws(problem.design, problem.response, problem.penalty, 0.0, off, w, false);
  ws.beta = beta;
  ws.refresh_residual();
  return ws.objective();
}

double robust_lasso_objective(const RobustLassoProblem& problem,
                              const Eigen::VectorXd& beta, const Eigen::VectorXd& e) {
  Workspace ws(problem.design, robust_working_response(problem), problem.lambda_beta,
               problem.lambda_e, nullptr, nullptr, true);
  ws.beta = beta;
  ws.e = e;
  ws.refresh_residual();
  return ws.objective();
}

}  // namespace rtreg
