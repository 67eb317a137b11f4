// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace rsgd {

using Rng = std::mt19937_64;

/// Named substreams of a run's seed. Each consumer of randomness gets its
/// own generator so that changing one component (e.g. the adversary) does
/// not shift the draws seen by another (e.g. the measurement sampler).
enum class Substream : std::uint64_t {
  Signal = 1,
  Measurement = 2,
  CorruptionSelect = 3,
  CorruptionNoise = 4,
  Directions = 5,
  MonteCarlo = 6,
};

/// Generator for (seed, substream, index). Distinct triples give
/// statistically independent streams; identical triples give identical ones.
Rng make_rng(std::uint64_t seed, Substream stream, std::uint64_t index = 0);

/// SplitMix64 finalizer, used to decorrelate nearby seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace rsgd
