// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>

#include "rsgd/corruption.hpp"
#include "rsgd/measurement.hpp"

namespace rsgd {

enum class ResponseModel { Linear, Relu };

struct Observation {
  Vector a;
  double clean_y = 0.0;
  double y = 0.0;
  bool corrupted = false;
  /// Row drawn from a dataset stream; absent for synthetic streams.
  std::optional<std::size_t> row;
};

/// Measurement sampler followed by a corruption channel. Synthetic streams
/// produce clean responses from a planted signal; dataset streams take them
/// from a response column. Measurement, selection and noise draws each use
/// their own substream of the seed.
class MeasurementStream {
 public:
  MeasurementStream(MeasurementModel model, CorruptionSpec corruption, ResponseModel response,
                    Vector x_true, std::uint64_t seed);

  MeasurementStream(DatasetRows rows, Vector responses, CorruptionSpec corruption,
                    ResponseModel response, std::uint64_t seed);

  /// Next observation. x_iter is what a residual-sign adversary inspects.
  Observation next(const Vector& x_iter);

  int dimension() const { return model_.dimension(); }
  ResponseModel response() const { return response_; }
  const std::optional<Vector>& x_true() const { return x_true_; }

 private:
  MeasurementModel model_;
  CorruptionSpec corruption_;
  ResponseModel response_;
  std::optional<Vector> x_true_;
  std::optional<Vector> responses_;
  Rng measurement_rng_;
  ChannelRng channel_rng_;
};

}  // namespace rsgd
