// SPDX-License-Identifier: Apache-2.0
//
// Semilog-y SVG line charts of per-solver mean trajectories.
#pragma once

#include <string>
#include <vector>

#include "rsgd/experiment.hpp"
#include "rsgd/trajectory.hpp"

namespace rsgd {

struct PlotOptions {
  std::string title;
  /// Plot clean loss instead of relative error.
  bool clean_loss = false;
  int width = 800;
  int height = 500;
};

/// One polyline per solver (mean over seeds), log10 y axis with decade
/// ticks, linear x axis, axis labels and a legend. Nonpositive values are
/// drawn at the bottom of the axis.
std::string render_svg(const std::vector<Aggregate>& series, const PlotOptions& options = {});

/// Throws InvalidParameter for an empty list and Io for an unwritable path.
void emit_plot(const std::vector<Trajectory>& trajectories, const std::string& path,
               const PlotOptions& options = {});

}  // namespace rsgd
