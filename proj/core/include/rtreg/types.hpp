#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace rtreg {

enum class DatasetKind { target, source };

/// A design matrix with its response vector. The unit of both target and
/// source data. Immutable by convention after construction: every routine
/// takes it by const reference and returns new objects.
///
/// Unit convention for corruption: an estimated corruption coordinate e_i
/// perturbs the response by sqrt(n) * e_i (the scaling used by the robust
/// program). See CorruptionVector.
struct LabeledDataset {
  Eigen::MatrixXd design;   // n x p
  Eigen::VectorXd response; // n
  std::string id;
  DatasetKind kind = DatasetKind::source;

  Eigen::Index rows() const { return design.rows(); }
  Eigen::Index cols() const { return design.cols(); }

  /// Throws DimensionMismatch / InvalidDesign on shape disagreement or
  /// non-finite entries.
  void validate() const;
};

/// A p-length coefficient vector. The support accessor is derived from the
/// values, so it is exact by construction.
struct SparseCoefficients {
  Eigen::VectorXd values;

  SparseCoefficients() = default;
  explicit SparseCoefficients(Eigen::VectorXd v) : values(std::move(v)) {}
  static SparseCoefficients zeros(Eigen::Index p) {
    return SparseCoefficients(Eigen::VectorXd::Zero(p));
  }

  Eigen::Index size() const { return values.size(); }
  std::vector<Eigen::Index> support() const;
  Eigen::Index nnz() const;
  double l1() const { return values.lpNorm<1>(); }
  double l2() const { return values.norm(); }
};

/// An n-length per-observation corruption estimate on the program scale:
/// the response-space offset of row i is sqrt(n) * values[i].
struct CorruptionVector {
  Eigen::VectorXd values;

  CorruptionVector() = default;
  explicit CorruptionVector(Eigen::VectorXd v) : values(std::move(v)) {}
  static CorruptionVector zeros(Eigen::Index n) {
    return CorruptionVector(Eigen::VectorXd::Zero(n));
  }

  Eigen::Index size() const { return values.size(); }
  std::vector<Eigen::Index> support() const;
  Eigen::Index nnz() const;
};

/// Inverse transform for a standardized design: column j of the original
/// matrix is standardized[j] * column_scales[j] + column_means[j].
struct StandardizationRecord {
  Eigen::VectorXd column_means;   // 0 when centering was off
  Eigen::VectorXd column_scales;  // 1 when scaling was off; each > 0

  /// Applies the recorded transform to another matrix (same p).
  Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const;
  /// Undoes the transform.
  Eigen::MatrixXd invert(const Eigen::MatrixXd& m) const;
  /// Maps coefficients fitted on the standardized design back to the
  /// original column units: beta_j / column_scales[j].
  Eigen::VectorXd coefficients_to_original(const Eigen::VectorXd& beta) const;

  static StandardizationRecord identity(Eigen::Index p);
};

struct PanelSummary {
  Eigen::Index p = 0;
  Eigen::Index n_target = 0;
  std::vector<Eigen::Index> source_sizes;
  Eigen::Index source_count() const {
    return static_cast<Eigen::Index>(source_sizes.size());
  }
};

}  // namespace rtreg
