#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace rtreg {

/// Base class for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad or inconsistent user-supplied configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset shapes disagree (names the offending dataset).
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Column j is constant while scaling was requested.
class ZeroVarianceColumn : public Error {
 public:
  ZeroVarianceColumn(Eigen::Index column, const std::string& dataset_id)
      : Error("zero-variance column " + std::to_string(column) +
              " in dataset '" + dataset_id + "' cannot be scaled"),
        column_(column) {}
  Eigen::Index column() const { return column_; }

 private:
  Eigen::Index column_;
};

/// Solver hit max_iters before the KKT residual dropped below tol.
/// Carries the best iterate so callers can inspect or keep it.
class NotConverged : public Error {
 public:
  NotConverged(int iters, double kkt, Eigen::VectorXd beta, Eigen::VectorXd e)
      : Error("solver did not converge after " + std::to_string(iters) +
              " sweeps (kkt residual " + format_kkt(kkt) + ")"),
        iters_(iters),
        kkt_(kkt),
        beta_(std::move(beta)),
        e_(std::move(e)) {}

  int iters() const { return iters_; }
  double kkt_residual() const { return kkt_; }
  const Eigen::VectorXd& best_beta() const { return beta_; }
  const Eigen::VectorXd& best_e() const { return e_; }

 private:
  static std::string format_kkt(double kkt) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", kkt);
    return buf;
  }

  int iters_;
  double kkt_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd e_;  // empty for plain lasso problems
};

/// Too few clean rows (or an exactly-zero scale) to estimate sigma.
class DegenerateResiduals : public Error {
 public:
  using Error::Error;
};

class EmptySelection : public Error {
 public:
  using Error::Error;
};

class EmptyGrid : public Error {
 public:
  using Error::Error;
};

class BadFoldCount : public Error {
 public:
  using Error::Error;
};

class InvalidDesign : public Error {
 public:
  using Error::Error;
};

class ZeroTruth : public Error {
 public:
  using Error::Error;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

/// CSV / file ingestion problem; message carries path and line number.
class IngestError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Wraps an error raised inside a pipeline stage with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[stage:" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace rtreg
