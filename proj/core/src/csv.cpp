#include "rtreg/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "rtreg/errors.hpp"

namespace rtreg {
namespace {

bool parse_double(std::string_view token, double& out) {
  // Trim spaces and an optional CR left by Windows line endings.
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) {
    token.remove_prefix(1);
  }
  while (!token.empty() &&
         (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
    token.remove_suffix(1);
  }
  if (token.empty()) return false;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_row(const std::string& line, std::vector<double>& row) {
  row.clear();
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    const std::string_view token(line.data() + start,
                                 (comma == std::string::npos ? line.size() : comma) - start);
    double v = 0.0;
    if (!parse_double(token, v)) return false;
    row.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return true;
}

bool blank(const std::string& line) {
  for (char c : line) {
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

}  // namespace

Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path.string() + "'");

  std::vector<std::vector<double>> rows;
  std::string line;
  std::vector<double> row;
  size_t lineno = 0;
  size_t width = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    if (!parse_row(line, row)) {
      if (first_content) {  // header row
        first_content = false;
        continue;
      }
      throw IngestError("'" + path.string() + "' line " + std::to_string(lineno) +
                        ": malformed numeric row");
    }
    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw IngestError("'" + path.string() + "' line " + std::to_string(lineno) +
                        ": expected " + std::to_string(width) + " fields, got " +
                        std::to_string(row.size()));
    }
    first_content = false;
    rows.push_back(row);
  }
  if (rows.empty()) throw IngestError("'" + path.string() + "' holds no data rows");

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
  }
  return m;
}

LabeledDataset load_dataset_csv(const std::filesystem::path& path,
                                bool response_last_column,
                                const std::optional<std::filesystem::path>& response_path,
                                const std::string& id, DatasetKind kind) {
  Eigen::MatrixXd m = load_matrix_csv(path);
  LabeledDataset out;
  out.id = id.empty() ? path.stem().string() : id;
  out.kind = kind;
  if (response_last_column) {
    if (m.cols() < 2) {
      throw IngestError("'" + path.string() +
                        "' needs at least 2 columns when the response is the last column");
    }
    out.design = m.leftCols(m.cols() - 1);
    out.response = m.col(m.cols() - 1);
  } else {
    if (!response_path) {
      throw ConfigError("dataset '" + out.id + "': no response column and no response file");
    }
    Eigen::MatrixXd r = load_matrix_csv(*response_path);
    if (r.cols() != 1) {
      throw IngestError("'" + response_path->string() + "' must have exactly one column");
    }
    out.design = std::move(m);
    out.response = r.col(0);
  }
  out.validate();
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                     const std::string& header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  if (!header.empty()) out << header << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void save_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data) {
  Eigen::MatrixXd m(data.rows(), data.cols() + 1);
  m.leftCols(data.cols()) = data.design;
  m.col(data.cols()) = data.response;
  std::ostringstream header;
  for (Eigen::Index j = 0; j < data.cols(); ++j) header << 'x' << (j + 1) << ',';
  header << 'y';
  save_matrix_csv(path, m, header.str());
}

}  // namespace rtreg
