// SPDX-License-Identifier: Apache-2.0
//
// Tabular dataset ingestion and preprocessing for real-data experiments,
// plus the clean-loss metric and the least-squares reference solution.
#pragma once

#include <string>
#include <vector>

#include "rsgd/measurement.hpp"

namespace rsgd {

struct PreprocessFlags {
  bool center = false;
  bool z_score = false;
  bool row_normalize = false;
  /// Subtract the response mean (applied before row normalization).
  bool center_response = false;
};

struct DatasetMatrix {
  Matrix features;
  Vector responses;
  std::vector<std::string> feature_names;
  std::string response_name;
  PreprocessFlags applied;
};

/// Reads a delimited text file with a header row. Column names match
/// exactly or, failing that, after lowercasing and dropping characters
/// other than letters and digits ("fixed acidity" matches "fixedAcidity").
/// An empty feature list selects every column except the response.
/// Preprocessing runs in the order center, z-score, row-normalize.
DatasetMatrix load_csv(const std::string& path, const std::vector<std::string>& feature_columns,
                       const std::string& response_column, const PreprocessFlags& flags,
                       char delimiter = ',');

/// Same parser over in-memory text; origin names the source in diagnostics.
DatasetMatrix parse_csv(const std::string& text, const std::vector<std::string>& feature_columns,
                        const std::string& response_column, const PreprocessFlags& flags,
                        char delimiter = ',', const std::string& origin = "<memory>");

void center_columns(DatasetMatrix& data);
/// Centers each column and divides by its sample standard deviation (n - 1).
/// Throws InvalidParameter for a constant column.
void z_score_columns(DatasetMatrix& data);
/// Divides each row and its response by the row norm. Throws InvalidParameter
/// for an all-zero row.
void row_normalize(DatasetMatrix& data);
void center_responses(DatasetMatrix& data);
void apply_preprocessing(DatasetMatrix& data, const PreprocessFlags& flags);

/// (1/m) sum_i (f(<a_i, x>) - y_i)^2 with f the identity or the ReLU.
double evaluate_clean_loss(const Vector& x, const DatasetMatrix& data, bool relu = false);
double evaluate_clean_loss(const Vector& x, const Matrix& features, const Vector& responses,
                           bool relu = false);

/// Least-squares minimizer by column-pivoted Householder QR. Throws
/// SingularSystem when m < d or the smallest pivot is below 1e-12 times
/// the largest.
Vector least_squares_baseline(const DatasetMatrix& data);
Vector least_squares_baseline(const Matrix& features, const Vector& responses);

/// Lowercase, letters and digits only.
std::string normalize_column_name(const std::string& name);

}  // namespace rsgd
