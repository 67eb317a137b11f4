// SPDX-License-Identifier: Apache-2.0
#include "rsgd/corruption.hpp"

#include <cmath>

#include "rsgd/error.hpp"

namespace rsgd {

double corruption_probability(const CorruptionSpec& spec) {
  return std::visit(
      [](const auto& s) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, NoCorruption>)
          return 0.0;
        else
          return s.p;
      },
      spec);
}

CorruptionSpec with_probability(const CorruptionSpec& spec, double p) {
  return std::visit(
      [p](auto s) -> CorruptionSpec {
        if constexpr (!std::is_same_v<decltype(s), NoCorruption>) s.p = p;
        return s;
      },
      spec);
}

std::string corruption_name(const CorruptionSpec& spec) {
  struct Namer {
    std::string operator()(const NoCorruption&) const { return "none"; }
    std::string operator()(const SignFlip&) const { return "sign_flip"; }
    std::string operator()(const ResidualSignAdversary&) const { return "residual_sign"; }
    std::string operator()(const AdditiveOblivious&) const { return "additive_oblivious"; }
  };
  return std::visit(Namer{}, spec);
}

void validate(const CorruptionSpec& spec) {
  const double p = corruption_probability(spec);
  require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidSpec,
          "corruption probability must lie in [0, 1], got " + std::to_string(p));
  if (const auto* ob = std::get_if<AdditiveOblivious>(&spec)) {
    std::visit(
        [](const auto& law) {
          using T = std::decay_t<decltype(law)>;
          if constexpr (std::is_same_v<T, GaussianNoise>)
            require(law.variance > 0.0 && std::isfinite(law.variance), ErrorCode::InvalidSpec,
                    "noise variance must be positive");
          else
            require(law.half_width > 0.0 && std::isfinite(law.half_width), ErrorCode::InvalidSpec,
                    "noise half width must be positive");
        },
        ob->noise);
  }
}

ChannelRng ChannelRng::from_seed(std::uint64_t seed, std::uint64_t index) {
  return ChannelRng{make_rng(seed, Substream::CorruptionSelect, index),
                    make_rng(seed, Substream::CorruptionNoise, index)};
}

double relu(double v) noexcept { return v > 0.0 ? v : 0.0; }

double draw_noise(const NoiseLaw& law, Rng& rng) {
  struct Drawer {
    Rng& rng;
    double operator()(const UniformNoise& u) const {
      std::uniform_real_distribution<double> dist(-u.half_width, u.half_width);
      return dist(rng);
    }
    double operator()(const GaussianNoise& g) const {
      std::normal_distribution<double> dist(0.0, std::sqrt(g.variance));
      return dist(rng);
    }
    double operator()(const TruncatedNormalNoise& t) const {
      std::normal_distribution<double> dist(0.0, t.half_width / 3.0);
      for (;;) {
        const double v = dist(rng);
        if (std::abs(v) <= t.half_width) return v;
      }
    }
  };
  return std::visit(Drawer{rng}, law);
}

namespace {

bool select(double p, Rng& rng) {
  // One uniform per call regardless of p keeps the selection stream aligned
  // across adversaries and probabilities.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < p;
}

}  // namespace

CorruptedResponse corrupt(const CorruptionSpec& spec, double clean_y, const Vector& a,
                          const Vector& x_true, const Vector* x_iter, bool relu_mode,
                          ChannelRng& rng) {
  (void)x_true;
  validate(spec);
  if (std::holds_alternative<ResidualSignAdversary>(spec)) {
    require(x_iter != nullptr, ErrorCode::MissingIterate,
            "the residual-sign adversary needs the current iterate");
    require(x_iter->size() == a.size(), ErrorCode::DimensionMismatch,
            "iterate dimension differs from measurement dimension");
  }
  const double p = corruption_probability(spec);
  if (!select(p, rng.select)) return {clean_y, false};

  struct Apply {
    double clean_y;
    const Vector& a;
    const Vector* x_iter;
    bool relu_mode;
    ChannelRng& rng;
    double operator()(const NoCorruption&) const { return clean_y; }
    double operator()(const SignFlip&) const { return -clean_y; }
    double operator()(const ResidualSignAdversary&) const {
      const double inner = x_iter->dot(a);
      const double m = relu_mode ? relu(inner) : inner;
      return 2.0 * m - clean_y;
    }
    double operator()(const AdditiveOblivious& ob) const {
      return clean_y + draw_noise(ob.noise, rng.noise);
    }
  };
  const double y = std::visit(Apply{clean_y, a, x_iter, relu_mode, rng}, spec);
  return {y, !std::holds_alternative<NoCorruption>(spec)};
}

double corruption_rate_audit(const CorruptionSpec& spec, long n_trials, ChannelRng& rng) {
  require(n_trials >= 1000, ErrorCode::InvalidParameter, "n_trials must be >= 1000");
  validate(spec);
  const double p = corruption_probability(spec);
  long hits = 0;
  for (long i = 0; i < n_trials; ++i)
    if (select(p, rng.select)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(n_trials);
}

}  // namespace rsgd
