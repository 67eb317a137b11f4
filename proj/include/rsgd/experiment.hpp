// SPDX-License-Identifier: Apache-2.0
//
// Runs the (solver, seed) cells of an experiment configuration, optionally
// over a grid of corruption probabilities, and aggregates trajectories.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rsgd/config.hpp"
#include "rsgd/dataset.hpp"
#include "rsgd/trajectory.hpp"

namespace rsgd {

/// Parameters a cell actually ran with after resolving lambda rules and
/// automatic step scales.
struct CellInfo {
  std::string solver;
  std::uint64_t seed = 0;
  SolverSpec spec;
  double x_norm = 0.0;
};

/// Summary of the dataset used by a real-data experiment.
struct DatasetSummary {
  long rows = 0;
  int d = 0;
  double least_squares_loss = 0.0;
  double least_squares_norm = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string fingerprint;
  double ctilde = 0.0;
  /// Ordered by (solver index, seed index).
  std::vector<Trajectory> trajectories;
  std::vector<CellInfo> cells;
  std::vector<std::string> warnings;
  std::optional<DatasetSummary> dataset;
  /// Preprocessed dataset shared by every cell of a real-data experiment.
  std::shared_ptr<const DatasetMatrix> data;
};

struct ExperimentHooks {
  /// Called once per cell before it runs; the returned observer sees every
  /// step of that cell only.
  std::function<StepObserver(const CellInfo&)> observer_for;
};

/// Planted signal for a seed: standard Gaussian, or normalized to unit norm.
Vector planted_signal(int d, std::uint64_t seed, SignalLaw law);

/// C~ used for lambda recommendation: the configured value, sqrt(2/pi) for
/// Gaussian-sphere measurements, or a Monte Carlo estimate.
double resolve_ctilde(const ExperimentConfig& config);

/// Loads and preprocesses the configured dataset.
DatasetMatrix load_dataset(const DatasetConfig& config);

/// Resolves lambda rules, step scales, C~ and the dataset without running
/// any cell; the returned result has cells but no trajectories.
ExperimentResult plan_experiment(const ExperimentConfig& config);

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentHooks& hooks = {});

/// Pointwise mean over seeds of one solver's checkpoints.
struct Aggregate {
  std::string solver;
  std::vector<long> k;
  std::vector<std::optional<double>> mean_relative_error;
  std::vector<std::optional<double>> mean_clean_loss;
  std::size_t n_seeds = 0;
};

/// One aggregate per solver in order of first appearance. Throws
/// InvalidParameter when seeds of a solver have different checkpoints.
std::vector<Aggregate> aggregate(const std::vector<Trajectory>& trajectories);

struct SweepRow {
  double p = 0.0;
  std::string solver;
  long k = 0;
  std::optional<double> mean_relative_error;
  std::optional<double> mean_clean_loss;
  std::size_t n_seeds = 0;
};

struct SweepResult {
  std::string fingerprint;
  std::vector<double> p_grid;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepRow> rows;
  std::vector<ExperimentResult> experiments;
};

/// Runs the configuration once per p in p_grid (replacing the corruption
/// probability) over seed_grid (replacing the seeds) and aggregates.
SweepResult run_sweep(const ExperimentConfig& config, const std::vector<double>& p_grid,
                      const std::vector<std::uint64_t>& seed_grid);

}  // namespace rsgd
