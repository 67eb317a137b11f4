// SPDX-License-Identifier: Apache-2.0
#include "rsgd/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rsgd/error.hpp"

namespace rsgd {

std::string normalize_column_name(const std::string& name) {
  std::string out;
  for (const unsigned char c : name)
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (const char c : line) {
    if (c == '"') {
      quoted = !quoted;
      cell.push_back(c);
    } else if (c == delimiter && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                        const std::string& origin) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  const std::string key = normalize_column_name(name);
  for (std::size_t i = 0; i < header.size(); ++i)
    if (!key.empty() && normalize_column_name(header[i]) == key) return i;
  throw Error(ErrorCode::MissingColumn, origin + ": column '" + name + "' not found");
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column,
                  const std::string& origin) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  require(!cell.empty() && ec == std::errc() && ptr == last && std::isfinite(v),
          ErrorCode::NonNumericCell,
          origin + ": row " + std::to_string(row) + ", column '" + column +
              "': non-numeric value '" + cell + "'");
  return v;
}

}  // namespace

DatasetMatrix parse_csv(const std::string& text, const std::vector<std::string>& feature_columns,
                        const std::string& response_column, const PreprocessFlags& flags,
                        char delimiter, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) header = split(line, delimiter);
  }
  require(!header.empty(), ErrorCode::EmptyDataset, origin + ": missing header row");

  DatasetMatrix data;
  data.response_name = response_column;
  const std::size_t response_idx = find_column(header, response_column, origin);
  std::vector<std::size_t> feature_idx;
  if (feature_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (i != response_idx) {
        feature_idx.push_back(i);
        data.feature_names.push_back(header[i]);
      }
  } else {
    for (const auto& name : feature_columns) {
      feature_idx.push_back(find_column(header, name, origin));
      data.feature_names.push_back(name);
    }
  }
  require(!feature_idx.empty(), ErrorCode::EmptyDataset, origin + ": no feature columns");

  std::vector<std::vector<double>> rows;
  std::vector<double> responses;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split(line, delimiter);
    require(cells.size() == header.size(), ErrorCode::Parse,
            origin + ": row " + std::to_string(row_number) + " has " +
                std::to_string(cells.size()) + " cells, header has " +
                std::to_string(header.size()));
    std::vector<double> r;
    r.reserve(feature_idx.size());
    for (const std::size_t j : feature_idx)
      r.push_back(parse_cell(cells[j], row_number, header[j], origin));
    responses.push_back(parse_cell(cells[response_idx], row_number, header[response_idx], origin));
    rows.push_back(std::move(r));
  }
  require(!rows.empty(), ErrorCode::EmptyDataset, origin + ": no data rows");

  data.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(feature_idx.size()));
  data.responses.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < feature_idx.size(); ++j)
      data.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    data.responses[static_cast<Eigen::Index>(i)] = responses[i];
  }
  apply_preprocessing(data, flags);
  return data;
}

DatasetMatrix load_csv(const std::string& path, const std::vector<std::string>& feature_columns,
                       const std::string& response_column, const PreprocessFlags& flags,
                       char delimiter) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), feature_columns, response_column, flags, delimiter, path);
}

void center_columns(DatasetMatrix& data) {
  const Eigen::RowVectorXd mean = data.features.colwise().mean();
  data.features.rowwise() -= mean;
  data.applied.center = true;
}

void z_score_columns(DatasetMatrix& data) {
  const Eigen::Index m = data.features.rows();
  require(m >= 2, ErrorCode::InvalidParameter, "z-scoring needs at least two rows");
  center_columns(data);
  for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
    const double sd = std::sqrt(data.features.col(j).squaredNorm() / static_cast<double>(m - 1));
    require(sd > 0.0, ErrorCode::InvalidParameter,
            "column '" + data.feature_names[static_cast<std::size_t>(j)] + "' is constant");
    data.features.col(j) /= sd;
  }
  data.applied.z_score = true;
}

void row_normalize(DatasetMatrix& data) {
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    const double n = data.features.row(i).norm();
    require(n > 0.0, ErrorCode::InvalidParameter,
            "row " + std::to_string(i) + " is zero and cannot be normalized");
    data.features.row(i) /= n;
    data.responses[i] /= n;
  }
  data.applied.row_normalize = true;
}

void center_responses(DatasetMatrix& data) {
  data.responses.array() -= data.responses.mean();
  data.applied.center_response = true;
}

void apply_preprocessing(DatasetMatrix& data, const PreprocessFlags& flags) {
  if (flags.center) center_columns(data);
  if (flags.z_score) z_score_columns(data);
  if (flags.center_response) center_responses(data);
  if (flags.row_normalize) row_normalize(data);
}

double evaluate_clean_loss(const Vector& x, const Matrix& features, const Vector& responses,
                           bool relu) {
  require(x.size() == features.cols(), ErrorCode::DimensionMismatch,
          "parameter dimension differs from feature count");
  require(responses.size() == features.rows(), ErrorCode::DimensionMismatch,
          "response count differs from row count");
  require(features.rows() > 0, ErrorCode::EmptyDataset, "dataset has no rows");
  Vector pred = features * x;
  if (relu) pred = pred.cwiseMax(0.0);
  return (pred - responses).squaredNorm() / static_cast<double>(features.rows());
}

double evaluate_clean_loss(const Vector& x, const DatasetMatrix& data, bool relu) {
  return evaluate_clean_loss(x, data.features, data.responses, relu);
}

Vector least_squares_baseline(const Matrix& features, const Vector& responses) {
  require(responses.size() == features.rows(), ErrorCode::DimensionMismatch,
          "response count differs from row count");
  require(features.rows() >= features.cols() && features.cols() > 0, ErrorCode::SingularSystem,
          "least squares needs at least as many rows as columns");
  const Eigen::ColPivHouseholderQR<Matrix> qr(features);
  const auto diag = qr.matrixR().diagonal().cwiseAbs();
  const double largest = diag.maxCoeff();
  const double smallest = diag.head(features.cols()).minCoeff();
  require(largest > 0.0 && smallest >= 1e-12 * largest, ErrorCode::SingularSystem,
          "feature matrix is rank deficient");
  return qr.solve(responses);
}

Vector least_squares_baseline(const DatasetMatrix& data) {
  return least_squares_baseline(data.features, data.responses);
}

}  // namespace rsgd
