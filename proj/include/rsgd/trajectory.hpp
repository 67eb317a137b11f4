// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rsgd/measurement.hpp"

namespace rsgd {

struct Checkpoint {
  long k = 0;
  std::optional<double> relative_error;
  std::optional<double> clean_loss;
  double elapsed_seconds = 0.0;
};

struct Trajectory {
  std::string solver;
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::vector<Checkpoint> checkpoints;
  /// Iterates at each checkpoint, kept only when requested.
  std::vector<Vector> iterates;
};

}  // namespace rsgd
