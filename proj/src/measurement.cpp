// SPDX-License-Identifier: Apache-2.0
#include "rsgd/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rsgd/error.hpp"
#include "rsgd/numeric.hpp"

namespace rsgd {

namespace {

template <class Draw>
Vector normalized_draw(int d, Draw&& draw) {
  Vector v(d);
  for (;;) {
    for (int i = 0; i < d; ++i) v[i] = draw();
    const double n = v.norm();
    if (n > 0.0 && std::isfinite(n)) return v / n;
  }
}

}  // namespace

MeasurementModel::MeasurementModel(Variant v) : variant_(std::move(v)) {
  if (const auto* ds = std::get_if<DatasetRows>(&variant_))
    require(ds->rows && ds->rows->rows() > 0, ErrorCode::EmptyDataset, "dataset has no rows");
  const int d = dimension();
  require(d >= 1, ErrorCode::InvalidParameter, "measurement dimension must be >= 1");
}

int MeasurementModel::dimension() const {
  return std::visit(
      [](const auto& m) -> int {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DatasetRows>) {
          require(m.rows != nullptr, ErrorCode::EmptyDataset, "dataset model has no matrix");
          return static_cast<int>(m.rows->cols());
        } else {
          return m.d;
        }
      },
      variant_);
}

std::string MeasurementModel::name() const {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianSphere>) return "gaussian_sphere";
        if constexpr (std::is_same_v<T, NormalizedRademacher>) return "rademacher";
        if constexpr (std::is_same_v<T, NormalizedIIDSubGaussian>) return "iid_subgaussian";
        if constexpr (std::is_same_v<T, DatasetRows>) return "dataset";
      },
      variant_);
}

SubGaussianBase parse_subgaussian_base(const std::string& name) {
  if (name == "uniform") return SubGaussianBase::Uniform;
  if (name == "rademacher") return SubGaussianBase::Rademacher;
  if (name == "gaussian") return SubGaussianBase::Gaussian;
  throw Error(ErrorCode::InvalidParameter, "unknown sub-Gaussian base '" + name + "'");
}

std::string to_string(SubGaussianBase base) {
  switch (base) {
    case SubGaussianBase::Uniform: return "uniform";
    case SubGaussianBase::Rademacher: return "rademacher";
    case SubGaussianBase::Gaussian: return "gaussian";
  }
  return "uniform";
}

std::size_t sample_row_index(const DatasetRows& rows, Rng& rng) {
  require(rows.rows && rows.rows->rows() > 0, ErrorCode::EmptyDataset,
          "cannot sample from an empty dataset");
  std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(rows.rows->rows()) - 1);
  return pick(rng);
}

Vector sample_measurement(const MeasurementModel& model, Rng& rng) {
  return std::visit(
      [&rng](const auto& m) -> Vector {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianSphere>) {
          std::normal_distribution<double> normal;
          return normalized_draw(m.d, [&] { return normal(rng); });
        } else if constexpr (std::is_same_v<T, NormalizedRademacher>) {
          const double s = 1.0 / std::sqrt(static_cast<double>(m.d));
          std::bernoulli_distribution coin(0.5);
          Vector v(m.d);
          for (int i = 0; i < m.d; ++i) v[i] = coin(rng) ? s : -s;
          return v;
        } else if constexpr (std::is_same_v<T, NormalizedIIDSubGaussian>) {
          switch (m.base) {
            case SubGaussianBase::Uniform: {
              const double r = std::sqrt(3.0);
              std::uniform_real_distribution<double> uni(-r, r);
              return normalized_draw(m.d, [&] { return uni(rng); });
            }
            case SubGaussianBase::Rademacher: {
              std::bernoulli_distribution coin(0.5);
              return normalized_draw(m.d, [&] { return coin(rng) ? 1.0 : -1.0; });
            }
            case SubGaussianBase::Gaussian: {
              std::normal_distribution<double> normal;
              return normalized_draw(m.d, [&] { return normal(rng); });
            }
          }
          return Vector();
        } else {
          const auto idx = sample_row_index(m, rng);
          return m.rows->row(static_cast<Eigen::Index>(idx)).transpose();
        }
      },
      model.variant());
}

CtildeEstimate estimate_ctilde_along(const MeasurementModel& model,
                                     std::span<const Vector> directions, long n_samples, Rng& rng) {
  require(!directions.empty(), ErrorCode::InvalidParameter, "need at least one direction");
  require(n_samples >= 100, ErrorCode::InvalidParameter, "n_samples must be >= 100");
  const int d = model.dimension();

  Matrix dirs(static_cast<Eigen::Index>(directions.size()), d);
  for (std::size_t j = 0; j < directions.size(); ++j) {
    require(directions[j].size() == d, ErrorCode::DimensionMismatch,
            "direction dimension differs from model dimension");
    const double n = directions[j].norm();
    require(n > 0.0, ErrorCode::InvalidParameter, "direction must be nonzero");
    dirs.row(static_cast<Eigen::Index>(j)) = directions[j].transpose() / n;
  }

  std::vector<MomentAccumulator> acc(directions.size());
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  Vector proj(dirs.rows());
  for (long s = 0; s < n_samples; ++s) {
    const Vector a = sample_measurement(model, rng);
    proj.noalias() = dirs * a;
    for (Eigen::Index j = 0; j < proj.size(); ++j) acc[static_cast<std::size_t>(j)].add(sqrt_d * std::abs(proj[j]));
  }

  CtildeEstimate out;
  out.n_samples = n_samples;
  out.n_directions = static_cast<int>(directions.size());
  out.value = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < acc.size(); ++j) {
    if (acc[j].mean() < out.value) {
      out.value = acc[j].mean();
      out.stderr_value = acc[j].stderr_of_mean();
      out.direction = dirs.row(static_cast<Eigen::Index>(j)).transpose();
    }
  }
  return out;
}

CtildeEstimate estimate_ctilde(const MeasurementModel& model, int n_directions, long n_samples,
                               Rng& rng) {
  require(n_directions >= 1, ErrorCode::InvalidParameter, "n_directions must be >= 1");
  const int d = model.dimension();
  std::vector<Vector> dirs;
  dirs.reserve(static_cast<std::size_t>(n_directions));
  std::normal_distribution<double> normal;
  for (int j = 0; j < n_directions; ++j)
    dirs.push_back(normalized_draw(d, [&] { return normal(rng); }));
  return estimate_ctilde_along(model, dirs, n_samples, rng);
}

std::vector<Vector> whiten(std::span<const Vector> rows, const Matrix& covariance) {
  require(covariance.rows() == covariance.cols(), ErrorCode::DimensionMismatch,
          "covariance must be square");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  require((covariance - covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          ErrorCode::Factorization, "covariance is not symmetric");
  const Eigen::LLT<Matrix> llt(covariance);
  require(llt.info() == Eigen::Success, ErrorCode::Factorization,
          "covariance is not symmetric positive definite");
  const auto lower = llt.matrixL();
  std::vector<Vector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    require(r.size() == covariance.rows(), ErrorCode::DimensionMismatch,
            "row dimension differs from covariance dimension");
    out.push_back(lower.solve(r));
  }
  return out;
}

}  // namespace rsgd
