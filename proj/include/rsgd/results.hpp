// SPDX-License-Identifier: Apache-2.0
//
// Trajectory CSV files, JSON manifests and sweep tables.
#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "rsgd/experiment.hpp"
#include "rsgd/trajectory.hpp"

namespace rsgd {

inline constexpr const char* kResultsHeader =
    "solver,seed,k,relative_error,clean_loss,elapsed_seconds";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Header plus one LF-terminated line per checkpoint; absent metrics are
/// empty cells.
std::string format_results_csv(const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> parse_results_csv(const std::string& text,
                                          const std::string& origin = "<memory>");

/// Throws InvalidParameter for an empty list and Io for an unwritable path.
void write_results_csv(const std::vector<Trajectory>& trajectories, const std::string& path);
std::vector<Trajectory> read_results_csv(const std::string& path);

nlohmann::json make_manifest(const ExperimentResult& result);

std::string format_sweep_csv(const SweepResult& sweep);
nlohmann::json make_sweep_manifest(const SweepResult& sweep);

/// Writes text to path, creating parent directories. Throws Io on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace rsgd
