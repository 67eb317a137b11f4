// SPDX-License-Identifier: Apache-2.0
#include "rsgd/solvers.hpp"

#include <chrono>
#include <cmath>

#include "rsgd/error.hpp"

namespace rsgd {

std::string to_string(Method m) {
  switch (m) {
    case Method::SgdExpLinear: return "sgd_exp_linear";
    case Method::SgdExpRelu: return "sgd_exp_relu";
    case Method::SgdRootLinear: return "sgd_root_linear";
    case Method::SgdRootRelu: return "sgd_root_relu";
    case Method::GlmTron: return "glmtron";
  }
  return "sgd_exp_linear";
}

Method parse_method(const std::string& s) {
  if (s == "sgd_exp_linear") return Method::SgdExpLinear;
  if (s == "sgd_exp_relu") return Method::SgdExpRelu;
  if (s == "sgd_root_linear") return Method::SgdRootLinear;
  if (s == "sgd_root_relu") return Method::SgdRootRelu;
  if (s == "glmtron") return Method::GlmTron;
  throw Error(ErrorCode::InvalidParameter, "unknown method '" + s + "'");
}

std::string to_string(GlmSchedule s) {
  switch (s) {
    case GlmSchedule::Const: return "const";
    case GlmSchedule::Root: return "root";
    case GlmSchedule::Exp: return "exp";
  }
  return "const";
}

GlmSchedule parse_glm_schedule(const std::string& s) {
  if (s == "const") return GlmSchedule::Const;
  if (s == "root") return GlmSchedule::Root;
  if (s == "exp") return GlmSchedule::Exp;
  throw Error(ErrorCode::InvalidParameter, "unknown GLM-Tron schedule '" + s + "'");
}

std::string to_string(CorruptionMode m) {
  return m == CorruptionMode::Massart ? "massart" : "oblivious";
}

CorruptionMode parse_corruption_mode(const std::string& s) {
  if (s == "massart") return CorruptionMode::Massart;
  if (s == "oblivious") return CorruptionMode::Oblivious;
  throw Error(ErrorCode::InvalidParameter, "unknown corruption mode '" + s + "'");
}

std::string to_string(Regime r) { return r == Regime::Linear ? "linear" : "relu"; }

Regime parse_regime(const std::string& s) {
  if (s == "linear") return Regime::Linear;
  if (s == "relu") return Regime::Relu;
  throw Error(ErrorCode::InvalidParameter, "unknown regime '" + s + "'");
}

bool is_relu(Method m) { return m == Method::SgdExpRelu || m == Method::SgdRootRelu; }

void validate(const SolverSpec& spec) {
  require(spec.d >= 1, ErrorCode::InvalidParameter, "dimension must be >= 1");
  require(spec.T >= 0, ErrorCode::InvalidParameter, "horizon must be >= 0");
  switch (spec.method) {
    case Method::SgdExpLinear:
    case Method::SgdExpRelu:
      require(spec.lambda > 1.0 && std::isfinite(spec.lambda), ErrorCode::InvalidParameter,
              "SGD-exp needs lambda > 1");
      require(spec.G > 0.0 && std::isfinite(spec.G), ErrorCode::InvalidParameter,
              "SGD-exp needs G > 0");
      break;
    case Method::SgdRootLinear:
    case Method::SgdRootRelu:
      require(spec.gamma > 0.0 && std::isfinite(spec.gamma), ErrorCode::InvalidParameter,
              "SGD-root needs gamma > 0");
      break;
    case Method::GlmTron:
      require(spec.m >= 1, ErrorCode::InvalidParameter, "GLM-Tron needs m >= 1");
      if (spec.schedule == GlmSchedule::Exp)
        require(spec.lambda > 1.0, ErrorCode::InvalidParameter,
                "GLM-Tron exp schedule needs lambda > 1");
      break;
  }
}

double sign0(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

namespace {

void check_unit(const Vector& a) {
  const double n = a.norm();
  require(std::abs(n - 1.0) <= kUnitNormTolerance, ErrorCode::Precondition,
          "measurement vector must have unit norm");
}

double exp_length(double G, double lambda, long k) {
  return G * std::pow(lambda, -static_cast<double>(k));
}

double root_length(double gamma, long k) {
  return gamma / std::sqrt(static_cast<double>(k) + 1.0);
}

// Signed multiple of a for a sign-based (l1) step of the given length.
double sign_coefficient(const Vector& x, const Vector& a, double y, double length, bool relu_mode) {
  const double inner = x.dot(a);
  if (relu_mode) {
    if (inner < 0.0) return 0.0;
    return length * sign0(y - relu(inner));
  }
  return length * sign0(y - inner);
}

void require_exp_params(double G, double lambda) {
  require(G > 0.0, ErrorCode::Precondition, "G must be positive");
  require(lambda > 1.0, ErrorCode::Precondition, "lambda must exceed 1");
}

}  // namespace

SolverState step_sgd_exp_linear(SolverState state, const Vector& a, double y, double G,
                                double lambda) {
  require_exp_params(G, lambda);
  check_unit(a);
  const double c = sign_coefficient(state.x, a, y, exp_length(G, lambda, state.k), false);
  if (c != 0.0) state.x.noalias() += c * a;
  ++state.k;
  return state;
}

SolverState step_sgd_exp_relu(SolverState state, const Vector& a, double y, double G,
                              double lambda) {
  require_exp_params(G, lambda);
  check_unit(a);
  const double c = sign_coefficient(state.x, a, y, exp_length(G, lambda, state.k), true);
  if (c != 0.0) state.x.noalias() += c * a;
  ++state.k;
  return state;
}

SolverState step_sgd_root(SolverState state, const Vector& a, double y, double gamma, bool relu_mode) {
  require(gamma > 0.0, ErrorCode::Precondition, "gamma must be positive");
  check_unit(a);
  const double c = sign_coefficient(state.x, a, y, root_length(gamma, state.k), relu_mode);
  if (c != 0.0) state.x.noalias() += c * a;
  ++state.k;
  return state;
}

double glmtron_rate(GlmSchedule schedule, long k, long m, double lambda) {
  const double inv_m = 1.0 / static_cast<double>(m);
  switch (schedule) {
    case GlmSchedule::Const: return inv_m;
    case GlmSchedule::Root: return inv_m / std::sqrt(static_cast<double>(k) + 1.0);
    case GlmSchedule::Exp: return std::pow(lambda, -static_cast<double>(k)) * inv_m;
  }
  return inv_m;
}

SolverState step_glmtron(SolverState state, const Vector& a, double y, GlmSchedule schedule,
                         long m, double lambda) {
  require(m >= 1, ErrorCode::Precondition, "m must be >= 1");
  if (schedule == GlmSchedule::Exp)
    require(lambda > 1.0, ErrorCode::Precondition, "lambda must exceed 1");
  const double c = glmtron_rate(schedule, state.k, m, lambda) * (y - relu(state.x.dot(a)));
  if (c != 0.0) state.x.noalias() += c * a;
  ++state.k;
  return state;
}

double apply_step(const SolverSpec& spec, SolverState& state, const Vector& a, double y,
                  double* scheduled_length) {
  double length = 0.0;
  double c = 0.0;
  switch (spec.method) {
    case Method::SgdExpLinear:
    case Method::SgdExpRelu:
      length = exp_length(spec.G, spec.lambda, state.k);
      if (!spec.allow_non_unit) check_unit(a);
      c = sign_coefficient(state.x, a, y, length, spec.method == Method::SgdExpRelu);
      break;
    case Method::SgdRootLinear:
    case Method::SgdRootRelu:
      length = root_length(spec.gamma, state.k);
      if (!spec.allow_non_unit) check_unit(a);
      c = sign_coefficient(state.x, a, y, length, spec.method == Method::SgdRootRelu);
      break;
    case Method::GlmTron:
      length = glmtron_rate(spec.schedule, state.k, spec.m, spec.lambda);
      c = length * (y - relu(state.x.dot(a)));
      break;
  }
  if (c != 0.0) state.x.noalias() += c * a;
  ++state.k;
  if (scheduled_length) *scheduled_length = length;
  return c;
}

Trajectory run(const SolverSpec& spec, MeasurementStream& stream, const RunOptions& options) {
  validate(spec);
  require(stream.dimension() == spec.d, ErrorCode::DimensionMismatch,
          "solver dimension differs from stream dimension");
  require(options.checkpoint_every >= 1, ErrorCode::InvalidParameter,
          "checkpoint interval must be >= 1");
  if (options.x_true)
    require(options.x_true->size() == spec.d, ErrorCode::DimensionMismatch,
            "signal dimension differs from solver dimension");

  SolverState state = SolverState::zero(spec.d);
  if (options.x0) {
    require(options.x0->size() == spec.d, ErrorCode::DimensionMismatch,
            "initial iterate dimension differs from solver dimension");
    state.x = *options.x0;
  }

  Trajectory traj;
  traj.solver = spec.name.empty() ? to_string(spec.method) : spec.name;
  traj.seed = options.seed;

  const auto start = std::chrono::steady_clock::now();
  const double x_norm = options.x_true ? options.x_true->norm() : 0.0;
  auto record = [&] {
    Checkpoint cp;
    cp.k = state.k;
    if (options.x_true) {
      const double err = (*options.x_true - state.x).norm();
      cp.relative_error = x_norm > 0.0 ? err / x_norm : err;
    }
    if (options.clean_loss) cp.clean_loss = options.clean_loss(state.x);
    cp.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    traj.checkpoints.push_back(cp);
    if (options.record_iterates) traj.iterates.push_back(state.x);
  };

  record();
  Vector before;
  for (long k = 0; k < spec.T; ++k) {
    const Observation obs = stream.next(state.x);
    if (options.observer) before = state.x;
    double length = 0.0;
    const double c = apply_step(spec, state, obs.a, obs.y, &length);
    if (options.observer)
      options.observer(StepEvent{spec.method, k, before, obs.a, obs.y, c, length, state.x});
    if (state.k % options.checkpoint_every == 0 || state.k == spec.T) record();
  }
  return traj;
}

double margin_factor(double p, CorruptionMode mode) {
  return mode == CorruptionMode::Massart ? 1.0 - 2.0 * p : 1.0 - p;
}

namespace {

void check_probability(double p, CorruptionMode mode) {
  require(p >= 0.0, ErrorCode::InvalidParameter, "p must be >= 0");
  if (mode == CorruptionMode::Massart)
    require(p < 0.5, ErrorCode::InvalidParameter, "Massart corruption needs p < 1/2");
  else
    require(p < 1.0, ErrorCode::InvalidParameter, "oblivious corruption needs p < 1");
}

}  // namespace

double lambda_excess_from_coefficient(double coefficient, int d, double p, long T,
                                      CorruptionMode mode) {
  check_probability(p, mode);
  require(T >= 2, ErrorCode::InvalidParameter, "horizon T must be >= 2");
  require(d >= 1, ErrorCode::InvalidParameter, "dimension must be >= 1");
  require(coefficient > 0.0, ErrorCode::InvalidParameter, "coefficient must be positive");
  const double q = margin_factor(p, mode);
  const double log_t = std::log(static_cast<double>(T));
  return coefficient * q * q / (static_cast<double>(d) * log_t * log_t);
}

double lambda_from_coefficient(double coefficient, int d, double p, long T, CorruptionMode mode) {
  return std::sqrt(1.0 + lambda_excess_from_coefficient(coefficient, d, p, T, mode));
}

ParamRecommendation recommend_lambda(int d, double p, long T, double R, double ctilde,
                                     CorruptionMode mode, Regime regime) {
  require(R > 0.0, ErrorCode::InvalidParameter, "R must be positive");
  require(ctilde > 0.0, ErrorCode::InvalidParameter, "C~ must be positive");
  ParamRecommendation rec;
  rec.lambda_sq_minus_one = lambda_excess_from_coefficient(ctilde * ctilde / R, d, p, T, mode);
  rec.lambda = std::sqrt(1.0 + rec.lambda_sq_minus_one);

  const double q = margin_factor(p, mode);
  const double ratio = ctilde * q / std::sqrt(static_cast<double>(d));
  auto fail = [&rec](std::string msg) {
    rec.preconditions_ok = false;
    rec.warnings.push_back(std::move(msg));
  };
  if (regime == Regime::Linear) {
    if (R <= 225.0) fail("R <= 225: the linear error bound does not apply");
    if (ratio >= 3.0 / 7.0) fail("C~ q / sqrt(d) >= 3/7: dimension too small for the linear bound");
    if (ratio / (3.0 * std::log(static_cast<double>(T))) >= 1.0 / 7.0)
      fail("C~ q / (3 sqrt(d) ln T) >= 1/7");
  } else {
    if (R <= 400.0) fail("R <= 400: the ReLU error bound does not apply");
    if (ratio >= 1.0) fail("C~ q / sqrt(d) >= 1: dimension too small for the ReLU bound");
  }
  return rec;
}

double recommend_G(double lambda, double x_norm_bound) {
  require(lambda > 1.0, ErrorCode::InvalidParameter, "lambda must exceed 1");
  require(x_norm_bound >= 0.0, ErrorCode::InvalidParameter, "norm bound must be >= 0");
  return x_norm_bound * std::sqrt(2.0 * lambda_excess(lambda));
}

}  // namespace rsgd
