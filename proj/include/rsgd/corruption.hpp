// SPDX-License-Identifier: Apache-2.0
//
// Response corruption channels. Each response is selected for corruption
// independently with probability p; what happens to a selected response
// depends on the adversary.
#pragma once

#include <optional>
#include <string>
#include <variant>

#include "rsgd/measurement.hpp"
#include "rsgd/random.hpp"

namespace rsgd {

struct NoCorruption {};

/// y -> -y.
struct SignFlip {
  double p = 0.0;
};

/// Reflects y about the prediction at the current iterate, flipping the
/// residual sign while keeping its magnitude: y -> 2 m - y.
struct ResidualSignAdversary {
  double p = 0.0;
};

struct UniformNoise {
  double half_width = 1.0;  // Uniform(-M, M)
};
struct GaussianNoise {
  double variance = 1.0;
};
/// Normal with standard deviation M/3, truncated to [-M, M] by rejection.
struct TruncatedNormalNoise {
  double half_width = 1.0;
};
using NoiseLaw = std::variant<UniformNoise, GaussianNoise, TruncatedNormalNoise>;

/// y -> y + nu with nu drawn from a law symmetric about 0, independent of
/// the measurement vector and the signal.
struct AdditiveOblivious {
  double p = 0.0;
  NoiseLaw noise = UniformNoise{};
};

using CorruptionSpec = std::variant<NoCorruption, SignFlip, ResidualSignAdversary, AdditiveOblivious>;

double corruption_probability(const CorruptionSpec& spec);
CorruptionSpec with_probability(const CorruptionSpec& spec, double p);
std::string corruption_name(const CorruptionSpec& spec);
/// Throws InvalidSpec when p is outside [0, 1] or a noise parameter is invalid.
void validate(const CorruptionSpec& spec);

/// The two generators consumed by a corruption channel: one for the
/// selection coin, one for the additive noise value.
struct ChannelRng {
  Rng select;
  Rng noise;

  static ChannelRng from_seed(std::uint64_t seed, std::uint64_t index = 0);
};

struct CorruptedResponse {
  double y = 0.0;
  bool was_corrupted = false;
};

double relu(double v) noexcept;

/// Applies the channel to a clean response. x_iter (may be null) is required
/// by ResidualSignAdversary; relu selects the prediction m = sigma(<x_iter, a>).
CorruptedResponse corrupt(const CorruptionSpec& spec, double clean_y, const Vector& a,
                          const Vector& x_true, const Vector* x_iter, bool relu, ChannelRng& rng);

double draw_noise(const NoiseLaw& law, Rng& rng);

/// Fraction of n_trials for which the selection coin fires.
double corruption_rate_audit(const CorruptionSpec& spec, long n_trials, ChannelRng& rng);

}  // namespace rsgd
