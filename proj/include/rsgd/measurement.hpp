// SPDX-License-Identifier: Apache-2.0
//
// Streaming measurement vectors. Every sampler returns vectors on the unit
// sphere whose sqrt(d)-scaled versions are mean-zero and isotropic, plus
// the Monte Carlo estimator for the constant C~ in
//   E|<u, a>| >= C~ ||u|| / sqrt(d).
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rsgd/random.hpp"

namespace rsgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative tolerance on ||a|| = 1 for every sampled measurement.
inline constexpr double kUnitNormTolerance = 1e-9;

/// Standard normal entries divided by their norm: uniform on the sphere.
struct GaussianSphere {
  int d = 1;
};

/// Entries +-1/sqrt(d).
struct NormalizedRademacher {
  int d = 1;
};

/// Base laws for normalized i.i.d. sub-Gaussian vectors; each has mean 0
/// and unit variance before normalization.
enum class SubGaussianBase { Uniform, Rademacher, Gaussian };

struct NormalizedIIDSubGaussian {
  int d = 1;
  SubGaussianBase base = SubGaussianBase::Uniform;
};

/// Rows of a data matrix, drawn uniformly with replacement.
struct DatasetRows {
  std::shared_ptr<const Matrix> rows;
};

class MeasurementModel {
 public:
  using Variant = std::variant<GaussianSphere, NormalizedRademacher, NormalizedIIDSubGaussian,
                               DatasetRows>;

  MeasurementModel(Variant v);  // NOLINT(google-explicit-constructor)

  int dimension() const;
  const Variant& variant() const { return variant_; }
  /// "gaussian_sphere", "rademacher", "iid_subgaussian" or "dataset".
  std::string name() const;
  bool is_dataset() const { return std::holds_alternative<DatasetRows>(variant_); }

 private:
  Variant variant_;
};

SubGaussianBase parse_subgaussian_base(const std::string& name);
std::string to_string(SubGaussianBase base);

Vector sample_measurement(const MeasurementModel& model, Rng& rng);

/// Row index drawn for a DatasetRows model (uniform with replacement).
std::size_t sample_row_index(const DatasetRows& rows, Rng& rng);

struct CtildeEstimate {
  double value = 0.0;
  double stderr_value = 0.0;
  long n_samples = 0;
  int n_directions = 0;
  /// Direction attaining the minimum.
  Vector direction;
};

/// Minimum over n_directions random unit directions u of the Monte Carlo
/// estimate of sqrt(d) E|<u, a>|. All directions share the same draws of a.
CtildeEstimate estimate_ctilde(const MeasurementModel& model, int n_directions, long n_samples,
                               Rng& rng);

/// Same estimator over caller-supplied directions (normalized internally).
CtildeEstimate estimate_ctilde_along(const MeasurementModel& model,
                                     std::span<const Vector> directions, long n_samples, Rng& rng);

inline constexpr int kDefaultCtildeDirections = 32;

/// Returns L^{-1} row for each row, where covariance = L L^T.
std::vector<Vector> whiten(std::span<const Vector> rows, const Matrix& covariance);

}  // namespace rsgd
