#include "rtreg/data_model.hpp"

#include <cmath>
#include <string>

#include "rtreg/errors.hpp"

namespace rtreg {

void LabeledDataset::validate() const {
  if (design.rows() != response.size()) {
    throw DimensionMismatch("dataset '" + id + "': design has " +
                            std::to_string(design.rows()) + " rows but response has " +
                            std::to_string(response.size()) + " entries");
  }
  if (!design.allFinite() || !response.allFinite()) {
    throw InvalidDesign("dataset '" + id + "' contains non-finite entries");
  }
}

std::vector<Eigen::Index> SparseCoefficients::support() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    if (values[j] != 0.0) out.push_back(j);
  }
  return out;
}

Eigen::Index SparseCoefficients::nnz() const {
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < values.size(); ++j) c += values[j] != 0.0;
  return c;
}

std::vector<Eigen::Index> CorruptionVector::support() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0) out.push_back(i);
  }
  return out;
}

Eigen::Index CorruptionVector::nnz() const {
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) c += values[i] != 0.0;
  return c;
}

Eigen::MatrixXd StandardizationRecord::apply(const Eigen::MatrixXd& m) const {
  Eigen::MatrixXd out = m;
  out.rowwise() -= column_means.transpose();
  out.array().rowwise() /= column_scales.transpose().array();
  return out;
}

Eigen::MatrixXd StandardizationRecord::invert(const Eigen::MatrixXd& m) const {
  Eigen::MatrixXd out = m;
  out.array().rowwise() *= column_scales.transpose().array();
  out.rowwise() += column_means.transpose();
  return out;
}

Eigen::VectorXd StandardizationRecord::coefficients_to_original(
    const Eigen::VectorXd& beta) const {
  return beta.array() / column_scales.array();
}

StandardizationRecord StandardizationRecord::identity(Eigen::Index p) {
  return {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p)};
}

std::pair<LabeledDataset, StandardizationRecord> standardize(
    const LabeledDataset& data, bool center, bool scale) {
  data.validate();
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.cols();
  if (n < 2) {
    throw InvalidDesign("standardize requires at least 2 rows, got " +
                        std::to_string(n));
  }

  StandardizationRecord rec = StandardizationRecord::identity(p);
  if (center) rec.column_means = data.design.colwise().mean();

  Eigen::MatrixXd centered = data.design;
  if (center) centered.rowwise() -= rec.column_means.transpose();

  if (scale) {
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    for (Eigen::Index j = 0; j < p; ++j) {
      const double norm = centered.col(j).norm();
      // A constant column centers to ~0; compare against the raw column
      // magnitude so an all-equal nonzero column is caught too.
      const double ref = std::max(1.0, data.design.col(j).cwiseAbs().maxCoeff());
      if (norm <= 1e-13 * ref * sqrt_n) {
        throw ZeroVarianceColumn(j, data.id);
      }
      rec.column_scales[j] = norm / sqrt_n;
    }
  }

  LabeledDataset out = data;
  out.design = std::move(centered);
  if (scale) {
    out.design.array().rowwise() /= rec.column_scales.transpose().array();
  }
  return {std::move(out), std::move(rec)};
}

LabeledDataset standardize_with(const LabeledDataset& data,
                                const StandardizationRecord& record) {
  if (record.column_means.size() != data.cols()) {
    throw DimensionMismatch("standardization record has p=" +
                            std::to_string(record.column_means.size()) +
                            " but dataset '" + data.id + "' has p=" +
                            std::to_string(data.cols()));
  }
  LabeledDataset out = data;
  out.design = record.apply(data.design);
  return out;
}

PanelSummary validate_panel(const LabeledDataset& target,
                            const std::vector<LabeledDataset>& sources) {
  target.validate();
  PanelSummary summary;
  summary.p = target.cols();
  summary.n_target = target.rows();
  for (const auto& src : sources) {
    src.validate();
    if (src.cols() != summary.p) {
      throw DimensionMismatch("source '" + src.id + "' has p=" +
                              std::to_string(src.cols()) + " but target has p=" +
                              std::to_string(summary.p));
    }
    summary.source_sizes.push_back(src.rows());
  }
  return summary;
}

}  // namespace rtreg
