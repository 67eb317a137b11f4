// SPDX-License-Identifier: Apache-2.0
#include "rsgd/stream.hpp"

#include "rsgd/error.hpp"

namespace rsgd {

MeasurementStream::MeasurementStream(MeasurementModel model, CorruptionSpec corruption,
                                     ResponseModel response, Vector x_true, std::uint64_t seed)
    : model_(std::move(model)),
      corruption_(std::move(corruption)),
      response_(response),
      x_true_(std::move(x_true)),
      measurement_rng_(make_rng(seed, Substream::Measurement)),
      channel_rng_(ChannelRng::from_seed(seed)) {
  validate(corruption_);
  require(x_true_->size() == model_.dimension(), ErrorCode::DimensionMismatch,
          "signal dimension differs from measurement dimension");
}

MeasurementStream::MeasurementStream(DatasetRows rows, Vector responses,
                                     CorruptionSpec corruption, ResponseModel response,
                                     std::uint64_t seed)
    : model_(std::move(rows)),
      corruption_(std::move(corruption)),
      response_(response),
      responses_(std::move(responses)),
      measurement_rng_(make_rng(seed, Substream::Measurement)),
      channel_rng_(ChannelRng::from_seed(seed)) {
  validate(corruption_);
  const auto& m = std::get<DatasetRows>(model_.variant());
  require(responses_->size() == m.rows->rows(), ErrorCode::DimensionMismatch,
          "response count differs from dataset row count");
}

Observation MeasurementStream::next(const Vector& x_iter) {
  Observation obs;
  if (responses_) {
    const auto& m = std::get<DatasetRows>(model_.variant());
    const std::size_t idx = sample_row_index(m, measurement_rng_);
    obs.a = m.rows->row(static_cast<Eigen::Index>(idx)).transpose();
    obs.clean_y = (*responses_)[static_cast<Eigen::Index>(idx)];
    obs.row = idx;
  } else {
    obs.a = sample_measurement(model_, measurement_rng_);
    const double inner = x_true_->dot(obs.a);
    obs.clean_y = response_ == ResponseModel::Relu ? relu(inner) : inner;
  }
  static const Vector kNoSignal;
  const auto r = corrupt(corruption_, obs.clean_y, obs.a, x_true_ ? *x_true_ : kNoSignal,
                         &x_iter, response_ == ResponseModel::Relu,
                         channel_rng_);
  obs.y = r.y;
  obs.corrupted = r.was_corrupted;
  return obs;
}

}  // namespace rsgd
