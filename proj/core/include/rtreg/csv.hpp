#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "rtreg/types.hpp"

namespace rtreg {

/// Reads a comma-separated numeric matrix. Row = observation. A first row
/// that fails numeric parsing is treated as a header and skipped.
/// Throws IngestError naming the file and 1-based line on malformed input.
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path);

/// Loads a dataset. With response_last_column the response is the final
/// column of `path`; otherwise `response_path` must point to a single-column
/// file with matching row count.
LabeledDataset load_dataset_csv(
    const std::filesystem::path& path, bool response_last_column = true,
    const std::optional<std::filesystem::path>& response_path = std::nullopt,
    const std::string& id = "", DatasetKind kind = DatasetKind::target);

/// Writers print every value with 17 significant digits so a read-back
/// reproduces the doubles exactly.
void save_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                     const std::string& header = "");
void save_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data);

std::string format_double(double v);

}  // namespace rtreg
