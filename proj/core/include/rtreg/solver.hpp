#pragma once

#include <optional>
#include <utility>

#include "rtreg/types.hpp"

namespace rtreg {

struct SolverSettings {
  int max_iters = 20000;  // full coordinate sweeps
  double tol = 1e-7;      // max KKT (subgradient) violation at exit
  bool active_set = true;
};

/// min over beta of (1/2n)||y - X beta||^2 + <linear_offset, beta>
///               + penalty * sum_j weights_j |beta_j|
///
/// `linear_offset` is the gradient-correction term the distributed
/// aggregation loop feeds in; leave it empty for a plain Lasso.
/// `weights` are per-coefficient penalty multipliers (empty = all ones).
struct LassoProblem {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  double penalty = 0.0;
  Eigen::VectorXd linear_offset;  // empty = zero
  Eigen::VectorXd weights;        // empty = ones
  Eigen::VectorXd warm_start;     // empty = cold start

  Eigen::Index rows() const { return design.rows(); }
  Eigen::Index cols() const { return design.cols(); }
};

/// min over (beta, e) of
///   (1/2n)||y - X(beta_offset + beta) - sqrt(n) e||^2
///     + lambda_beta ||beta||_1 + lambda_e ||e||_1
///
/// Equivalent to a Lasso on the augmented design [X, sqrt(n) I_n] with
/// per-block penalty multipliers; the solver is tested against that
/// reduction.
struct RobustLassoProblem {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  double lambda_beta = 0.0;
  double lambda_e = 0.0;
  std::optional<Eigen::VectorXd> beta_offset;  // fixed center for the Delta fit
  Eigen::VectorXd warm_beta;  // empty = cold
  Eigen::VectorXd warm_e;

  Eigen::Index rows() const { return design.rows(); }
  Eigen::Index cols() const { return design.cols(); }
};

/// Cyclic coordinate descent (natural coordinate order) with an active-set
/// outer loop. Returns the first iterate whose KKT residual is <= tol;
/// throws NotConverged carrying the best iterate otherwise.
SparseCoefficients lasso_fit(const LassoProblem& problem,
                             const SolverSettings& settings = {});

std::pair<SparseCoefficients, CorruptionVector> robust_lasso_fit(
    const RobustLassoProblem& problem, const SolverSettings& settings = {});

/// Max subgradient violation of a candidate; 0 at an exact optimum.
double kkt_residual(const LassoProblem& problem, const Eigen::VectorXd& beta);
double kkt_residual(const RobustLassoProblem& problem, const Eigen::VectorXd& beta,
                    const Eigen::VectorXd& e);

double lasso_objective(const LassoProblem& problem, const Eigen::VectorXd& beta);
double robust_lasso_objective(const RobustLassoProblem& problem,
                              const Eigen::VectorXd& beta, const Eigen::VectorXd& e);

inline double soft_threshold(double a, double lambda) {
  if (a > lambda) return a - lambda;
  if (a < -lambda) return a + lambda;
  return 0.0;  // ties |a| == lambda resolve to zero
}

}  // namespace rtreg
