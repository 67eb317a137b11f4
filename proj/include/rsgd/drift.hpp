// SPDX-License-Identifier: Apache-2.0
//
// Drift-analysis constants and tail bounds for the transformed residual
// process
//
//   Y_k = ||u_k||^2,   u_k = lambda^k (x - x_k) / G,
//
// together with Monte Carlo validators that simulate SGD-exp steps against
// the residual-sign adversary. Every constant uses the margin factor
// q = 1 - 2p (Massart) or q = 1 - p (symmetric oblivious noise).
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "rsgd/measurement.hpp"
#include "rsgd/solvers.hpp"
#include "rsgd/trajectory.hpp"

namespace rsgd {

struct DriftParams {
  double a = 0.0;       // inner threshold 1 / (2 (lambda^2 - 1))
  double b = 0.0;       // hitting threshold 3a
  double c_star = 0.0;
  double eta = 0.0;     // c_star sqrt(lambda^2 - 1)
  double rho = 0.0;
  double D = 1.0;
  Regime regime = Regime::Linear;
  CorruptionMode mode = CorruptionMode::Massart;
  double lambda = 1.0;
  double lambda_sq_minus_one = 0.0;
  double p = 0.0;
  int d = 1;
  double ctilde = 0.0;
};

/// Largest admissible lambda^2 - 1: C~^2 q^2 / (9d) (linear) or / (49d)
/// (ReLU), further capped by lambda^2 < 50/49.
double drift_window(double p, int d, double ctilde, Regime regime,
                    CorruptionMode mode = CorruptionMode::Massart);

/// Throws WindowViolation when lambda lies outside the admissible window
/// and InvalidParameter on malformed inputs.
DriftParams drift_params(double lambda, double p, int d, double ctilde, Regime regime,
                         CorruptionMode mode = CorruptionMode::Massart);

/// Same constants from an exact value of lambda^2 - 1.
DriftParams drift_params_from_excess(double lambda_sq_minus_one, double p, int d, double ctilde,
                                     Regime regime, CorruptionMode mode = CorruptionMode::Massart);

/// Lower bound on c_star: C~ q / (15 sqrt(d)) (linear) or C~ q / (20 sqrt(d)) (ReLU).
double c_star_floor(const DriftParams& params);

struct HittingBound {
  double raw = 0.0;
  double clamped = 0.0;  // min(raw, 1)
};

/// P[tau_b <= K] <= K D exp(-eta (b - a)) / (1 - rho).
HittingBound hitting_bound(const DriftParams& params, long K);

/// exp(eta a) (rho^k + D (1 - rho^k) / (1 - rho)).
double mgf_recursion_bound(double rho, double D, double eta, double a, long k);
/// Limit of mgf_recursion_bound as k grows: exp(eta a) D / (1 - rho).
double mgf_recursion_limit(double rho, double D, double eta, double a);

/// G (2 C~ sqrt(R d) ln T / q) exp(-T C~^2 q^2 / (3 R d ln^2 T)).
double theorem_error_bound(double G, double ctilde, double R, int d, double p, long T,
                           CorruptionMode mode = CorruptionMode::Massart);

/// Failure-probability term 70 d T^{1 - sqrt(R)/15} / (C~ q)^2 (linear) or
/// 120 d T^{1 - sqrt(R)/20} / (C~ q)^2 (ReLU).
double theorem_failure_probability(int d, double p, long T, double R, double ctilde,
                                   Regime regime,
                                   CorruptionMode mode = CorruptionMode::Massart);

/// Y_k = lambda^{2k} ||x_true - x_k||^2 / G^2 for each (k, x_k) pair.
std::vector<double> extract_Y_process(std::span<const long> ks, std::span<const Vector> iterates,
                                      const Vector& x_true, double lambda, double G);
/// Uses the checkpoint indices and recorded iterates of a trajectory.
std::vector<double> extract_Y_process(const Trajectory& trajectory, const Vector& x_true,
                                      double lambda, double G);

/// Result of the parameter search for a non-vacuous hitting bound.
struct NonVacuousChoice {
  double lambda = 1.0;
  double lambda_sq_minus_one = 0.0;
  double exponent = 0.0;  // eta (b - a)
  double bound = 0.0;     // raw hitting bound at K
};

/// Largest lambda^2 - 1 inside the window for which eta (b - a) >= min_exponent
/// and hitting_bound(K) <= max_bound, found by bisection on log(lambda^2 - 1).
/// Both quantities are monotone in lambda^2 - 1, so the bracket is valid.
/// Throws Precondition when no admissible value exists.
NonVacuousChoice find_nonvacuous_lambda(double p, int d, double ctilde, Regime regime, long K,
                                        double max_bound, double min_exponent,
                                        CorruptionMode mode = CorruptionMode::Massart);

struct HittingExperiment {
  DriftParams params;
  MeasurementModel model{GaussianSphere{1}};
  Vector x_true;
  double G = 1.0;
  long K = 0;
  long n_runs = 1;
  std::uint64_t seed = 0;
  /// Replaces params.b as the hitting level when set.
  std::optional<double> b_override;
};

struct HittingReport {
  double empirical_prob = 0.0;
  long n_runs = 0;
  long hits = 0;
  double theoretical_bound = 0.0;  // raw
  double clamped_bound = 0.0;
  long K = 0;
  double b = 0.0;
  double Y0 = 0.0;
  /// Largest Y_k seen over all runs and steps.
  double max_Y = 0.0;
  /// empirical_prob <= bound + 4 binomial stderr (vacuously true when bound > 1).
  bool consistent = true;
};

/// Simulates n_runs SGD-exp runs of K steps under ResidualSignAdversary(p)
/// and counts runs with Y_k >= b for some k <= K. Throws InvalidInitialization
/// when Y_0 = ||x_true||^2 / G^2 >= a.
HittingReport mc_hitting_probability(const HittingExperiment& experiment);

/// One simulated step from the state u (x_k = 0, x_true = u, k = 0, G = 1).
struct DriftSample {
  double delta_Y = 0.0;
  /// Realized step sign s, so that x_{k+1} = s a.
  double s = 0.0;
  double inner = 0.0;  // <u, a>
  bool corrupted = false;
};

DriftSample drift_sample(const Vector& u, const Vector& a, double lambda, double p,
                         Regime regime, ChannelRng& rng);

struct DriftQuery {
  double u_norm_sq = 0.0;
  double p = 0.0;
  double lambda = 1.0;
  int d = 1;
  double ctilde = 0.0;
  MeasurementModel model{GaussianSphere{1}};
  long n_samples = 100000;
  std::uint64_t seed = 0;
  /// Direction of u; e_1 when absent.
  std::optional<Vector> direction;
  CorruptionMode mode = CorruptionMode::Massart;
};

struct DriftTermReport {
  double u_norm_sq = 0.0;
  double estimate = 0.0;
  double stderr_value = 0.0;
  double ceiling = 0.0;
  long n_samples = 0;
  bool pass = false;  // estimate <= ceiling + 4 stderr
};

/// (3/2 + lambda^2) - 2 lambda^2 q C~ / (sqrt(d) sqrt(2 (lambda^2 - 1))).
double drift_linear_ceiling(double lambda, double p, int d, double ctilde,
                            CorruptionMode mode = CorruptionMode::Massart);

/// Monte Carlo estimate of E[Y_{k+1} - Y_k] at a state with a <= ||u||^2 < b.
/// Throws Precondition outside that band.
DriftTermReport mc_drift_linear_term(const DriftQuery& query);

/// Monte Carlo estimate of E[exp(eta (Y_{k+1} - a))] at a state with
/// ||u||^2 < a, against the ceiling D. Throws Precondition otherwise.
DriftTermReport mc_drift_c2(const DriftQuery& query, const DriftParams& params);

/// Evenly spaced states a + i (b - a) / n for i in [0, n).
std::vector<double> band_states(const DriftParams& params, int n);

nlohmann::json to_json(const DriftParams& params);
nlohmann::json to_json(const HittingReport& report);
nlohmann::json to_json(const DriftTermReport& report);

}  // namespace rsgd
