// SPDX-License-Identifier: Apache-2.0
//
// Streaming solvers for linear and ReLU regression:
//
//   SGD-exp   x_{k+1} = x_k + G lambda^{-k} sign(y_k - m_k) g_k
//   SGD-root  x_{k+1} = x_k + gamma (k+1)^{-1/2} sign(y_k - m_k) g_k
//   GLM-Tron  x_{k+1} = x_k + eta_k (y_k - sigma(<x_k, a_k>)) a_k
//
// where (m_k, g_k) = (<x_k, a_k>, a_k) for linear regression and
// (sigma(<x_k, a_k>), 1{<x_k, a_k> >= 0} a_k) for ReLU regression, and
// sign(0) = 0. The iteration index starts at 0, so the first SGD-exp step
// has length G.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rsgd/measurement.hpp"
#include "rsgd/stream.hpp"
#include "rsgd/trajectory.hpp"

namespace rsgd {

enum class Method { SgdExpLinear, SgdExpRelu, SgdRootLinear, SgdRootRelu, GlmTron };
enum class GlmSchedule { Const, Root, Exp };
/// Massart adversaries tolerate p < 1/2; symmetric oblivious noise p < 1.
enum class CorruptionMode { Massart, Oblivious };
enum class Regime { Linear, Relu };

std::string to_string(Method m);
Method parse_method(const std::string& s);
std::string to_string(GlmSchedule s);
GlmSchedule parse_glm_schedule(const std::string& s);
std::string to_string(CorruptionMode m);
CorruptionMode parse_corruption_mode(const std::string& s);
std::string to_string(Regime r);
Regime parse_regime(const std::string& s);

bool is_relu(Method m);

struct SolverSpec {
  std::string name;
  Method method = Method::SgdExpLinear;
  GlmSchedule schedule = GlmSchedule::Const;
  double lambda = 1.0;   // SGD-exp and GLM-Tron Exp
  double G = 1.0;        // SGD-exp
  double gamma = 1.0;    // SGD-root
  long m = 1;            // GLM-Tron
  long T = 1;
  int d = 1;
  /// Skip the unit-norm check on measurement vectors (raw dataset rows).
  bool allow_non_unit = false;
};

/// Throws InvalidParameter if the spec's invariants do not hold.
void validate(const SolverSpec& spec);

struct SolverState {
  Vector x;
  long k = 0;

  static SolverState zero(int d) { return {Vector::Zero(d), 0}; }
};

/// sign with sign(0) = 0.
double sign0(double v) noexcept;

SolverState step_sgd_exp_linear(SolverState state, const Vector& a, double y, double G,
                                double lambda);
SolverState step_sgd_exp_relu(SolverState state, const Vector& a, double y, double G,
                              double lambda);
SolverState step_sgd_root(SolverState state, const Vector& a, double y, double gamma, bool relu);
SolverState step_glmtron(SolverState state, const Vector& a, double y, GlmSchedule schedule,
                         long m, double lambda = 1.0);

/// Step size of the GLM-Tron schedule at index k.
double glmtron_rate(GlmSchedule schedule, long k, long m, double lambda);

/// What a single step did: x_after = x_before + coefficient * a.
struct StepEvent {
  Method method;
  long k;
  const Vector& x_before;
  const Vector& a;
  double y;
  double coefficient;
  /// Step length prescribed by the schedule at k (|coefficient| for
  /// sign-based methods when the step is not gated or zero-residual).
  double scheduled_length;
  const Vector& x_after;
};

using StepObserver = std::function<void(const StepEvent&)>;

/// Applies one step of spec.method in place and returns the signed coefficient.
double apply_step(const SolverSpec& spec, SolverState& state, const Vector& a, double y,
                  double* scheduled_length = nullptr);

struct RunOptions {
  long checkpoint_every = 1000;
  std::optional<Vector> x_true;
  /// Clean-loss metric evaluated at each checkpoint, if set.
  std::function<double(const Vector&)> clean_loss;
  StepObserver observer;
  /// Starting iterate; zero when absent.
  std::optional<Vector> x0;
  bool record_iterates = false;
  std::uint64_t seed = 0;
};

/// Runs spec.T steps over the stream from x0 (default 0), recording a
/// checkpoint at k = 0, every checkpoint_every steps, and at k = T.
Trajectory run(const SolverSpec& spec, MeasurementStream& stream, const RunOptions& options);

struct ParamRecommendation {
  double lambda = 1.0;
  /// lambda^2 - 1 as computed from the formula, before the square root.
  double lambda_sq_minus_one = 0.0;
  double g_min = 0.0;
  bool preconditions_ok = true;
  std::vector<std::string> warnings;
};

/// lambda = sqrt(1 + C~^2 q^2 / (R d ln^2 T)) with q = 1 - 2p (Massart) or
/// 1 - p (Oblivious). g_min is left at 0; use recommend_G for the step scale.
ParamRecommendation recommend_lambda(int d, double p, long T, double R, double ctilde,
                                     CorruptionMode mode, Regime regime = Regime::Linear);

/// lambda^2 - 1 = coefficient q^2 / (d ln^2 T); the experimental guideline
/// for oblivious noise uses coefficient 2.
double lambda_excess_from_coefficient(double coefficient, int d, double p, long T,
                                      CorruptionMode mode);
double lambda_from_coefficient(double coefficient, int d, double p, long T, CorruptionMode mode);

/// lambda^2 - 1 evaluated as (lambda - 1)(lambda + 1), exact in the first factor.
inline double lambda_excess(double lambda) noexcept { return (lambda - 1.0) * (lambda + 1.0); }

/// Smallest admissible initial step scale, x_norm_bound sqrt(2 (lambda^2 - 1)).
double recommend_G(double lambda, double x_norm_bound);

/// (1 - 2p) for Massart corruption, (1 - p) for symmetric oblivious noise.
double margin_factor(double p, CorruptionMode mode);

}  // namespace rsgd
