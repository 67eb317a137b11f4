// SPDX-License-Identifier: Apache-2.0
//
// JSON experiment configuration. The schema is documented in README.md;
// every object rejects keys it does not know, naming the full key path.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "rsgd/corruption.hpp"
#include "rsgd/dataset.hpp"
#include "rsgd/solvers.hpp"
#include "rsgd/stream.hpp"

namespace rsgd {

/// How a solver's lambda is obtained.
struct LambdaFixed {
  double value = 1.0;
};
/// recommend_lambda with the given R (C~ and the corruption mode come from
/// the experiment).
struct LambdaRecommend {
  double R = 900.0;
};
/// lambda^2 - 1 = coefficient q^2 / (d ln^2 T).
struct LambdaCoefficient {
  double coefficient = 2.0;
};
using LambdaRule = std::variant<LambdaFixed, LambdaRecommend, LambdaCoefficient>;

struct SolverConfig {
  std::string name;
  Method method = Method::SgdExpLinear;
  GlmSchedule schedule = GlmSchedule::Const;
  LambdaRule lambda = LambdaFixed{1.0};
  /// Absent means automatic: recommend_G(lambda, norm bound).
  std::optional<double> G;
  /// Multiplies the automatic G; ignored when G is given.
  double G_scale = 1.0;
  /// Absent means gamma = G.
  std::optional<double> gamma;
  /// GLM-Tron normalizer; absent means 1 for synthetic streams and the row
  /// count for datasets.
  std::optional<long> m;
};

enum class SignalLaw { Gaussian, UnitSphere };

struct DatasetConfig {
  std::string path;
  std::vector<std::string> features;
  std::string response;
  char delimiter = ',';
  PreprocessFlags preprocess;
};

struct OutputConfig {
  std::string dir = "results";
  std::string prefix = "run";
  /// Write measured wall-clock times; zeros otherwise.
  bool timing = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  int d = 1;
  long T = 1;
  std::vector<std::uint64_t> seeds{1};
  long checkpoint_every = 1000;
  MeasurementModel::Variant measurement = GaussianSphere{1};
  CorruptionSpec corruption = NoCorruption{};
  /// Massart or oblivious margin factor; defaults from the corruption type.
  CorruptionMode mode = CorruptionMode::Massart;
  ResponseModel response = ResponseModel::Linear;
  SignalLaw signal = SignalLaw::Gaussian;
  /// Absent means sqrt(2/pi) for Gaussian-sphere measurements and a Monte
  /// Carlo estimate otherwise.
  std::optional<double> ctilde;
  /// Bound on ||x|| for automatic G; absent means ||x_true|| (synthetic) or
  /// the least-squares solution norm (datasets).
  std::optional<double> x_norm_bound;
  std::vector<SolverConfig> solvers;
  bool metric_relative_error = true;
  bool metric_clean_loss = false;
  std::optional<DatasetConfig> dataset;
  OutputConfig output;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig parse_config_text(const std::string& text);
/// Throws Io, Parse or Schema errors.
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON form; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& config);

/// 16 hex digits of FNV-1a 64 over the canonical JSON serialization,
/// excluding the output block.
std::string fingerprint(const ExperimentConfig& config);
std::uint64_t fnv1a64(const std::string& bytes) noexcept;

}  // namespace rsgd
