// SPDX-License-Identifier: Apache-2.0
#include "rsgd/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rsgd/error.hpp"
#include "rsgd/numeric.hpp"
#include "rsgd/stream.hpp"

namespace rsgd {

namespace {

constexpr long kChunk = 8192;

void check_inputs(double p, int d, double ctilde, CorruptionMode mode) {
  require(d >= 1, ErrorCode::InvalidParameter, "dimension must be >= 1");
  require(ctilde > 0.0 && std::isfinite(ctilde), ErrorCode::InvalidParameter,
          "C~ must be positive");
  require(p >= 0.0, ErrorCode::InvalidParameter, "p must be >= 0");
  require(margin_factor(p, mode) > 0.0, ErrorCode::InvalidParameter,
          mode == CorruptionMode::Massart ? "Massart corruption needs p < 1/2"
                                          : "oblivious corruption needs p < 1");
}

}  // namespace

double drift_window(double p, int d, double ctilde, Regime regime, CorruptionMode mode) {
  check_inputs(p, d, ctilde, mode);
  const double q = margin_factor(p, mode);
  const double denom = (regime == Regime::Linear ? 9.0 : 49.0) * static_cast<double>(d);
  return std::min(ctilde * ctilde * q * q / denom, 1.0 / 49.0);
}

DriftParams drift_params_from_excess(double lambda_sq_minus_one, double p, int d, double ctilde,
                                     Regime regime, CorruptionMode mode) {
  check_inputs(p, d, ctilde, mode);
  const double e = lambda_sq_minus_one;
  const double q = margin_factor(p, mode);
  const double dd = static_cast<double>(d);
  const double window = drift_window(p, d, ctilde, regime, mode);
  require(e > 0.0, ErrorCode::WindowViolation, "lambda must exceed 1");
  // lambda^2 < 50/49 is strict; the regime window is inclusive.
  require(e < 1.0 / 49.0 && e <= ctilde * ctilde * q * q /
                                     ((regime == Regime::Linear ? 9.0 : 49.0) * dd),
          ErrorCode::WindowViolation,
          "lambda^2 - 1 = " + std::to_string(e) + " exceeds the admissible window " +
              std::to_string(window));

  DriftParams out;
  out.regime = regime;
  out.mode = mode;
  out.lambda_sq_minus_one = e;
  out.lambda = std::sqrt(1.0 + e);
  out.p = p;
  out.d = d;
  out.ctilde = ctilde;

  const double l2 = 1.0 + e;
  const double sd = std::sqrt(dd);
  const double se = std::sqrt(e);
  out.a = 1.0 / (2.0 * e);
  out.b = 3.0 * out.a;
  if (regime == Regime::Linear) {
    out.c_star = (std::sqrt(2.0) * l2 * q * ctilde / sd - se * (1.5 + l2)) / (8.0 * l2);
    out.rho = 1.0 - ctilde * ctilde * q * q / (60.0 * dd);
    out.D = std::exp(ctilde * q / (3.0 * sd));
  } else {
    out.c_star = (l2 * q * ctilde / (std::sqrt(2.0) * sd) - se * (1.5 + l2 / 2.0)) / (8.0 * l2);
    out.rho = 1.0 - ctilde * ctilde * q * q / (100.0 * dd);
    out.D = std::exp(ctilde * q / (6.0 * sd));
  }
  out.eta = out.c_star * se;
  return out;
}

DriftParams drift_params(double lambda, double p, int d, double ctilde, Regime regime,
                         CorruptionMode mode) {
  require(std::isfinite(lambda), ErrorCode::InvalidParameter, "lambda must be finite");
  require(lambda > 1.0, ErrorCode::WindowViolation, "lambda must exceed 1");
  DriftParams out = drift_params_from_excess(lambda_excess(lambda), p, d, ctilde, regime, mode);
  out.lambda = lambda;
  return out;
}

double c_star_floor(const DriftParams& params) {
  const double q = margin_factor(params.p, params.mode);
  const double denom = params.regime == Regime::Linear ? 15.0 : 20.0;
  return params.ctilde * q / (denom * std::sqrt(static_cast<double>(params.d)));
}

HittingBound hitting_bound(const DriftParams& params, long K) {
  require(K >= 0, ErrorCode::InvalidParameter, "K must be >= 0");
  HittingBound out;
  out.raw = static_cast<double>(K) * params.D * std::exp(-params.eta * (params.b - params.a)) /
            (1.0 - params.rho);
  out.clamped = std::min(out.raw, 1.0);
  return out;
}

double mgf_recursion_bound(double rho, double D, double eta, double a, long k) {
  require(rho > 0.0 && rho < 1.0, ErrorCode::InvalidParameter, "rho must lie in (0, 1)");
  require(D >= 1.0, ErrorCode::InvalidParameter, "D must be >= 1");
  require(k >= 1, ErrorCode::InvalidParameter, "k must be >= 1");
  const double rk = std::pow(rho, static_cast<double>(k));
  return std::exp(eta * a) * (rk + D * (1.0 - rk) / (1.0 - rho));
}

double mgf_recursion_limit(double rho, double D, double eta, double a) {
  require(rho > 0.0 && rho < 1.0, ErrorCode::InvalidParameter, "rho must lie in (0, 1)");
  require(D >= 1.0, ErrorCode::InvalidParameter, "D must be >= 1");
  return std::exp(eta * a) * D / (1.0 - rho);
}

double theorem_error_bound(double G, double ctilde, double R, int d, double p, long T,
                           CorruptionMode mode) {
  require(T >= 2, ErrorCode::InvalidParameter, "horizon T must be >= 2");
  require(R > 0.0, ErrorCode::InvalidParameter, "R must be positive");
  require(G > 0.0, ErrorCode::InvalidParameter, "G must be positive");
  check_inputs(p, d, ctilde, mode);
  const double q = margin_factor(p, mode);
  const double dd = static_cast<double>(d);
  const double log_t = std::log(static_cast<double>(T));
  const double prefactor = G * 2.0 * ctilde * std::sqrt(R * dd) * log_t / q;
  return prefactor *
         std::exp(-static_cast<double>(T) * ctilde * ctilde * q * q / (3.0 * R * dd * log_t * log_t));
}

double theorem_failure_probability(int d, double p, long T, double R, double ctilde,
                                   Regime regime, CorruptionMode mode) {
  require(T >= 2, ErrorCode::InvalidParameter, "horizon T must be >= 2");
  require(R > 0.0, ErrorCode::InvalidParameter, "R must be positive");
  check_inputs(p, d, ctilde, mode);
  const double q = margin_factor(p, mode);
  const double dd = static_cast<double>(d);
  const double lead = regime == Regime::Linear ? 70.0 : 120.0;
  const double div = regime == Regime::Linear ? 15.0 : 20.0;
  return lead * dd / (ctilde * ctilde * q * q) *
         std::pow(static_cast<double>(T), 1.0 - std::sqrt(R) / div);
}

std::vector<double> extract_Y_process(std::span<const long> ks, std::span<const Vector> iterates,
                                      const Vector& x_true, double lambda, double G) {
  require(lambda > 1.0, ErrorCode::InvalidParameter, "lambda must exceed 1");
  require(G > 0.0, ErrorCode::InvalidParameter, "G must be positive");
  require(ks.size() == iterates.size(), ErrorCode::DimensionMismatch,
          "index and iterate counts differ");
  std::vector<double> out;
  out.reserve(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    require(iterates[i].size() == x_true.size(), ErrorCode::DimensionMismatch,
            "iterate dimension differs from signal dimension");
    const double scale = std::pow(lambda, 2.0 * static_cast<double>(ks[i]));
    out.push_back(scale * (x_true - iterates[i]).squaredNorm() / (G * G));
  }
  return out;
}

std::vector<double> extract_Y_process(const Trajectory& trajectory, const Vector& x_true,
                                      double lambda, double G) {
  require(trajectory.iterates.size() == trajectory.checkpoints.size(), ErrorCode::MissingIterate,
          "trajectory was recorded without iterates");
  std::vector<long> ks;
  ks.reserve(trajectory.checkpoints.size());
  for (const auto& cp : trajectory.checkpoints) ks.push_back(cp.k);
  return extract_Y_process(ks, trajectory.iterates, x_true, lambda, G);
}

NonVacuousChoice find_nonvacuous_lambda(double p, int d, double ctilde, Regime regime, long K,
                                        double max_bound, double min_exponent,
                                        CorruptionMode mode) {
  require(K >= 1, ErrorCode::InvalidParameter, "K must be >= 1");
  require(max_bound > 0.0, ErrorCode::InvalidParameter, "max_bound must be positive");
  auto admissible = [&](double e) {
    const DriftParams dp = drift_params_from_excess(e, p, d, ctilde, regime, mode);
    return dp.eta * (dp.b - dp.a) >= min_exponent && hitting_bound(dp, K).raw <= max_bound &&
           dp.c_star > 0.0;
  };
  const double hi_limit = drift_window(p, d, ctilde, regime, mode) * (1.0 - 1e-12);
  double lo = std::log(1e-300);
  double hi = std::log(hi_limit);
  require(admissible(std::exp(lo)), ErrorCode::Precondition,
          "no lambda in the window reaches the requested bound");
  if (admissible(std::exp(hi))) lo = hi;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (admissible(std::exp(mid)))
      lo = mid;
    else
      hi = mid;
  }
  // Round-trip through lambda, then back off until the constants computed
  // from the stored lambda also satisfy the request.
  double e = std::exp(lo);
  for (int it = 0; it < 1000; ++it) {
    const double lambda = std::sqrt(1.0 + e);
    const double e_rt = lambda_excess(lambda);
    if (e_rt > 0.0 && e_rt <= hi_limit && admissible(e_rt)) {
      const DriftParams dp = drift_params(lambda, p, d, ctilde, regime, mode);
      return {lambda, e_rt, dp.eta * (dp.b - dp.a), hitting_bound(dp, K).raw};
    }
    e *= 1.0 - 1e-6;
  }
  throw Error(ErrorCode::Precondition, "parameter search did not converge");
}

HittingReport mc_hitting_probability(const HittingExperiment& ex) {
  const DriftParams& dp = ex.params;
  require(ex.K >= 0, ErrorCode::InvalidParameter, "K must be >= 0");
  require(ex.n_runs >= 1, ErrorCode::InvalidParameter, "n_runs must be >= 1");
  require(ex.G > 0.0, ErrorCode::InvalidParameter, "G must be positive");
  require(ex.x_true.size() == dp.d && ex.model.dimension() == dp.d, ErrorCode::DimensionMismatch,
          "signal, model and drift dimensions must agree");
  const double Y0 = ex.x_true.squaredNorm() / (ex.G * ex.G);
  require(Y0 < dp.a, ErrorCode::InvalidInitialization,
          "Y_0 = ||x||^2 / G^2 = " + std::to_string(Y0) + " must be below a = " +
              std::to_string(dp.a));
  const double b = ex.b_override.value_or(dp.b);

  SolverSpec spec;
  spec.method = dp.regime == Regime::Linear ? Method::SgdExpLinear : Method::SgdExpRelu;
  spec.lambda = dp.lambda;
  spec.G = ex.G;
  spec.T = ex.K;
  spec.d = dp.d;
  const ResponseModel response =
      dp.regime == Regime::Linear ? ResponseModel::Linear : ResponseModel::Relu;
  const double inv_g2 = 1.0 / (ex.G * ex.G);

  std::vector<char> hit(static_cast<std::size_t>(ex.n_runs), 0);
  std::vector<double> max_y(static_cast<std::size_t>(ex.n_runs), Y0);
  parallel_for(static_cast<std::size_t>(ex.n_runs), [&](std::size_t r) {
    Rng seeder = make_rng(ex.seed, Substream::MonteCarlo, r);
    MeasurementStream stream(ex.model, ResidualSignAdversary{dp.p}, response, ex.x_true, seeder());
    SolverState state = SolverState::zero(dp.d);
    double y = Y0;
    double peak = Y0;
    bool reached = y >= b;
    for (long k = 0; k < ex.K && !reached; ++k) {
      const Observation obs = stream.next(state.x);
      apply_step(spec, state, obs.a, obs.y);
      y = std::pow(dp.lambda, 2.0 * static_cast<double>(state.k)) *
          (ex.x_true - state.x).squaredNorm() * inv_g2;
      peak = std::max(peak, y);
      reached = y >= b;
    }
    hit[r] = reached ? 1 : 0;
    max_y[r] = peak;
  });

  HittingReport out;
  out.n_runs = ex.n_runs;
  out.K = ex.K;
  out.b = b;
  out.Y0 = Y0;
  for (std::size_t r = 0; r < hit.size(); ++r) {
    out.hits += hit[r];
    out.max_Y = std::max(out.max_Y, max_y[r]);
  }
  out.empirical_prob = static_cast<double>(out.hits) / static_cast<double>(out.n_runs);
  const HittingBound hb = hitting_bound(dp, ex.K);
  out.theoretical_bound = hb.raw;
  out.clamped_bound = hb.clamped;
  if (hb.raw <= 1.0) {
    const double pe = out.empirical_prob;
    const double se = std::sqrt(pe * (1.0 - pe) / static_cast<double>(out.n_runs));
    out.consistent = pe <= hb.raw + 4.0 * se;
  }
  return out;
}

DriftSample drift_sample(const Vector& u, const Vector& a, double lambda, double p,
                         Regime regime, ChannelRng& rng) {
  require(u.size() == a.size(), ErrorCode::DimensionMismatch,
          "state dimension differs from measurement dimension");
  const bool relu_mode = regime == Regime::Relu;
  const SolverState zero = SolverState::zero(static_cast<int>(u.size()));
  DriftSample out;
  out.inner = u.dot(a);
  const double clean_y = relu_mode ? relu(out.inner) : out.inner;
  const CorruptedResponse r =
      corrupt(ResidualSignAdversary{p}, clean_y, a, u, &zero.x, relu_mode, rng);
  out.corrupted = r.was_corrupted;
  const SolverState next = relu_mode ? step_sgd_exp_relu(zero, a, r.y, 1.0, lambda)
                                     : step_sgd_exp_linear(zero, a, r.y, 1.0, lambda);
  out.s = next.x.dot(a) / a.squaredNorm();
  // lambda^2 ||u - x_1||^2 - ||u||^2 expanded to avoid cancellation in ||u||^2.
  out.delta_Y = lambda_excess(lambda) * u.squaredNorm() +
                lambda * lambda * (next.x.squaredNorm() - 2.0 * u.dot(next.x));
  return out;
}

double drift_linear_ceiling(double lambda, double p, int d, double ctilde, CorruptionMode mode) {
  check_inputs(p, d, ctilde, mode);
  require(lambda > 1.0, ErrorCode::InvalidParameter, "lambda must exceed 1");
  const double l2 = lambda * lambda;
  const double q = margin_factor(p, mode);
  return (1.5 + l2) - 2.0 * l2 * q * ctilde /
                          (std::sqrt(static_cast<double>(d)) * std::sqrt(2.0 * lambda_excess(lambda)));
}

namespace {

Vector state_vector(const DriftQuery& q) {
  require(q.model.dimension() == q.d, ErrorCode::DimensionMismatch,
          "measurement model dimension differs from d");
  require(q.n_samples >= 2, ErrorCode::InvalidParameter, "n_samples must be >= 2");
  Vector dir = Vector::Zero(q.d);
  if (q.direction) {
    require(q.direction->size() == q.d, ErrorCode::DimensionMismatch,
            "direction dimension differs from d");
    const double n = q.direction->norm();
    require(n > 0.0, ErrorCode::InvalidParameter, "direction must be nonzero");
    dir = *q.direction / n;
  } else {
    dir[0] = 1.0;
  }
  return std::sqrt(q.u_norm_sq) * dir;
}

// Accumulates value(delta_Y) over n_samples steps from u in deterministic chunks.
template <class F>
MomentAccumulator accumulate(const DriftQuery& q, const Vector& u, F value) {
  const long n_chunks = (q.n_samples + kChunk - 1) / kChunk;
  std::vector<MomentAccumulator> parts(static_cast<std::size_t>(n_chunks));
  parallel_for(parts.size(), [&](std::size_t c) {
    Rng meas = make_rng(q.seed, Substream::Measurement, c + 1);
    ChannelRng channel = ChannelRng::from_seed(q.seed, c + 1);
    const long begin = static_cast<long>(c) * kChunk;
    const long end = std::min(q.n_samples, begin + kChunk);
    for (long i = begin; i < end; ++i) {
      const Vector a = sample_measurement(q.model, meas);
      parts[c].add(value(drift_sample(u, a, q.lambda, q.p, Regime::Linear, channel).delta_Y));
    }
  });
  MomentAccumulator total;
  for (const auto& part : parts) total.merge(part);
  return total;
}

}  // namespace

DriftTermReport mc_drift_linear_term(const DriftQuery& q) {
  const DriftParams dp = drift_params(q.lambda, q.p, q.d, q.ctilde, Regime::Linear, q.mode);
  require(q.u_norm_sq >= dp.a && q.u_norm_sq < dp.b, ErrorCode::Precondition,
          "state must satisfy a <= ||u||^2 < b");
  const Vector u = state_vector(q);
  const MomentAccumulator acc = accumulate(q, u, [](double dy) { return dy; });
  DriftTermReport out;
  out.u_norm_sq = q.u_norm_sq;
  out.estimate = acc.mean();
  out.stderr_value = acc.stderr_of_mean();
  out.ceiling = drift_linear_ceiling(q.lambda, q.p, q.d, q.ctilde, q.mode);
  out.n_samples = q.n_samples;
  out.pass = out.estimate <= out.ceiling + 4.0 * out.stderr_value;
  return out;
}

DriftTermReport mc_drift_c2(const DriftQuery& q, const DriftParams& params) {
  require(q.u_norm_sq >= 0.0 && q.u_norm_sq < params.a, ErrorCode::Precondition,
          "state must satisfy ||u||^2 < a");
  require(q.d == params.d, ErrorCode::DimensionMismatch, "query and drift dimensions differ");
  const Vector u = state_vector(q);
  const double offset = q.u_norm_sq - params.a;
  const MomentAccumulator acc =
      accumulate(q, u, [&](double dy) { return std::exp(params.eta * (offset + dy)); });
  DriftTermReport out;
  out.u_norm_sq = q.u_norm_sq;
  out.estimate = acc.mean();
  out.stderr_value = acc.stderr_of_mean();
  out.ceiling = params.D;
  out.n_samples = q.n_samples;
  out.pass = out.estimate <= out.ceiling + 4.0 * out.stderr_value;
  return out;
}

std::vector<double> band_states(const DriftParams& params, int n) {
  require(n >= 1, ErrorCode::InvalidParameter, "state count must be >= 1");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out.push_back(params.a + (params.b - params.a) * static_cast<double>(i) / n);
  return out;
}

nlohmann::json to_json(const DriftParams& p) {
  return {{"a", p.a},
          {"b", p.b},
          {"c_star", p.c_star},
          {"eta", p.eta},
          {"rho", p.rho},
          {"D", p.D},
          {"regime", to_string(p.regime)},
          {"mode", to_string(p.mode)},
          {"lambda", p.lambda},
          {"lambda_sq_minus_one", p.lambda_sq_minus_one},
          {"p", p.p},
          {"d", p.d},
          {"ctilde", p.ctilde}};
}

nlohmann::json to_json(const HittingReport& r) {
  return {{"empirical_prob", r.empirical_prob},
          {"n_runs", r.n_runs},
          {"hits", r.hits},
          {"theoretical_bound", r.theoretical_bound},
          {"clamped_bound", r.clamped_bound},
          {"K", r.K},
          {"b", r.b},
          {"Y0", r.Y0},
          {"max_Y", r.max_Y},
          {"consistent", r.consistent}};
}

nlohmann::json to_json(const DriftTermReport& r) {
  return {{"u_norm_sq", r.u_norm_sq},
          {"estimate", r.estimate},
          {"stderr", r.stderr_value},
          {"ceiling", r.ceiling},
          {"n_samples", r.n_samples},
          {"pass", r.pass}};
}

}  // namespace rsgd
