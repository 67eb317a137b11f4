// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "rsgd/solvers.hpp"
#include "support.hpp"

using namespace rsgd;
using rsgd::test::error_code_of;
using rsgd::test::rel_close;

namespace {

Vector vec2(double a, double b) { return (Vector(2) << a, b).finished(); }

const double kCtilde = std::sqrt(2.0 / std::numbers::pi);

Vector gaussian_signal(int d, std::uint64_t seed) {
  Rng rng = make_rng(seed, Substream::Signal);
  std::normal_distribution<double> normal;
  Vector x(d);
  for (int i = 0; i < d; ++i) x[i] = normal(rng);
  return x;
}

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("sign0 maps zero to zero") {
  CHECK(sign0(0.0) == 0.0);
  CHECK(sign0(-0.0) == 0.0);
  CHECK(sign0(2.5) == 1.0);
  CHECK(sign0(-1e-300) == -1.0);
}

TEST_CASE("first SGD-exp step has length G") {
  const auto s = step_sgd_exp_linear(SolverState::zero(2), vec2(1, 0), 1.0, 1.0, 2.0);
  CHECK(s.x == vec2(1, 0));
  CHECK(s.k == 1);
}

TEST_CASE("SGD-exp step at k = 1 has length G / lambda") {
  SolverState st{vec2(1, 0), 1};
  const auto s = step_sgd_exp_linear(st, vec2(0, 1), -1.0, 1.0, 2.0);
  CHECK(s.x == vec2(1, -0.5));
  CHECK(s.k == 2);
}

TEST_CASE("zero residual leaves the iterate unchanged but advances k") {
  SolverState st{vec2(0.6, 0.8), 4};
  const auto s = step_sgd_exp_linear(st, vec2(0.6, 0.8), 1.0, 1.0, 2.0);
  CHECK(s.x == st.x);
  CHECK(s.k == 5);
}

TEST_CASE("ReLU step is gated by the sign of the prediction") {
  SolverState st{vec2(-1, 0), 0};
  const auto s = step_sgd_exp_relu(st, vec2(1, 0), 5.0, 1.0, 2.0);
  CHECK(s.x == st.x);
  CHECK(s.k == 1);
  SolverState zero{vec2(0, 0), 0};
  const auto z = step_sgd_exp_relu(zero, vec2(1, 0), 5.0, 1.0, 2.0);
  CHECK(z.x == vec2(1, 0));
}

TEST_CASE("three scripted SGD-exp steps match a hand unroll") {
  SolverState st = SolverState::zero(2);
  st = step_sgd_exp_linear(st, vec2(1, 0), -1.0, 1.0, 2.0);
  st = step_sgd_exp_linear(st, vec2(0, 1), 2.0, 1.0, 2.0);
  st = step_sgd_exp_linear(st, vec2(1, 0), 0.5, 1.0, 2.0);
  CHECK(st.x == vec2(-0.75, 0.5));
  CHECK(st.k == 3);
}

TEST_CASE("five scripted SGD-root steps match a hand unroll") {
  SolverState st = SolverState::zero(2);
  st = step_sgd_root(st, vec2(1, 0), 1.0, 1.0, false);
  st = step_sgd_root(st, vec2(0, 1), -1.0, 1.0, false);
  st = step_sgd_root(st, vec2(1, 0), 0.5, 1.0, false);
  st = step_sgd_root(st, vec2(0, 1), 0.0, 1.0, false);
  st = step_sgd_root(st, vec2(0.6, 0.8), 1.0, 1.0, false);
  const double x0 = 1.0 - 1.0 / std::sqrt(3.0) + 0.6 / std::sqrt(5.0);
  const double x1 = -1.0 / std::sqrt(2.0) + 0.5 + 0.8 / std::sqrt(5.0);
  CHECK(st.x[0] == doctest::Approx(x0).epsilon(1e-14));
  CHECK(st.x[1] == doctest::Approx(x1).epsilon(1e-14));
  CHECK(st.k == 5);
}

TEST_CASE("SGD-root step at k = 3 has length gamma / 2") {
  SolverState st{vec2(0, 0), 3};
  const auto s = step_sgd_root(st, vec2(1, 0), 1.0, 1.0, false);
  CHECK(s.x == vec2(0.5, 0));
}

TEST_CASE("ReLU and linear steps agree when the prediction and response are nonnegative") {
  Rng rng = make_rng(31, Substream::Measurement);
  const MeasurementModel model(GaussianSphere{3});
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  int compared = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vector a = sample_measurement(model, rng);
    Vector x = Vector::Zero(3);
    for (int j = 0; j < 3; ++j) x[j] = unif(rng) - 1.0;
    if (x.dot(a) < 0.0) continue;
    const double y = unif(rng);
    const SolverState st{x, 7};
    CHECK(step_sgd_exp_relu(st, a, y, 0.3, 1.01).x == step_sgd_exp_linear(st, a, y, 0.3, 1.01).x);
    CHECK(step_sgd_root(st, a, y, 0.3, true).x == step_sgd_root(st, a, y, 0.3, false).x);
    ++compared;
  }
  CHECK(compared > 500);
}

TEST_CASE("GLM-Tron steps and rates") {
  const auto s = step_glmtron(SolverState::zero(2), vec2(1, 0), 2.0, GlmSchedule::Const, 1);
  CHECK(s.x == vec2(2, 0));
  SolverState neg{vec2(-1, 0), 0};
  const auto r = step_glmtron(neg, vec2(1, 0), 0.5, GlmSchedule::Const, 2);
  CHECK(r.x == vec2(-0.75, 0));

  CHECK(glmtron_rate(GlmSchedule::Const, 50, 4, 1.0) == 0.25);
  CHECK(glmtron_rate(GlmSchedule::Root, 3, 1, 1.0) == 0.5);
  CHECK(rel_close(glmtron_rate(GlmSchedule::Exp, 100, 1599, 1.00003), 0.00062351753618991807, 1e-12));
  CHECK(glmtron_rate(GlmSchedule::Exp, 0, 1, 1.5) == 1.0);
  CHECK(error_code_of([] { step_glmtron(SolverState::zero(1), Vector::Ones(1), 1.0, GlmSchedule::Const, 0); }) ==
        ErrorCode::Precondition);
  CHECK(error_code_of([] {
          step_glmtron(SolverState::zero(1), Vector::Ones(1), 1.0, GlmSchedule::Exp, 1, 1.0);
        }) == ErrorCode::Precondition);
}

TEST_CASE("step preconditions") {
  CHECK(error_code_of([] { step_sgd_exp_linear(SolverState::zero(2), vec2(1, 1), 1.0, 1.0, 2.0); }) ==
        ErrorCode::Precondition);
  CHECK(error_code_of([] { step_sgd_exp_linear(SolverState::zero(2), vec2(1, 0), 1.0, 0.0, 2.0); }) ==
        ErrorCode::Precondition);
  CHECK(error_code_of([] { step_sgd_exp_linear(SolverState::zero(2), vec2(1, 0), 1.0, 1.0, 1.0); }) ==
        ErrorCode::Precondition);
  CHECK(error_code_of([] { step_sgd_root(SolverState::zero(2), vec2(1, 0), 1.0, -1.0, false); }) ==
        ErrorCode::Precondition);
}

TEST_CASE("spec validation") {
  SolverSpec spec;
  spec.d = 3;
  spec.T = 10;
  spec.lambda = 1.01;
  CHECK_FALSE(error_code_of([&] { validate(spec); }).has_value());
  spec.T = 0;
  CHECK_FALSE(error_code_of([&] { validate(spec); }).has_value());
  spec.lambda = 1.0;
  CHECK(error_code_of([&] { validate(spec); }) == ErrorCode::InvalidParameter);
  spec.lambda = 1.01;
  spec.G = 0.0;
  CHECK(error_code_of([&] { validate(spec); }) == ErrorCode::InvalidParameter);
  spec.G = 1.0;
  spec.T = -1;
  CHECK(error_code_of([&] { validate(spec); }) == ErrorCode::InvalidParameter);
  spec.T = 10;
  spec.method = Method::SgdRootLinear;
  spec.gamma = 0.0;
  CHECK(error_code_of([&] { validate(spec); }) == ErrorCode::InvalidParameter);
  spec.method = Method::GlmTron;
  spec.m = 0;
  CHECK(error_code_of([&] { validate(spec); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("method, schedule, mode and regime names round trip") {
  for (auto m : {Method::SgdExpLinear, Method::SgdExpRelu, Method::SgdRootLinear, Method::SgdRootRelu,
                 Method::GlmTron})
    CHECK(parse_method(to_string(m)) == m);
  for (auto s : {GlmSchedule::Const, GlmSchedule::Root, GlmSchedule::Exp})
    CHECK(parse_glm_schedule(to_string(s)) == s);
  for (auto m : {CorruptionMode::Massart, CorruptionMode::Oblivious})
    CHECK(parse_corruption_mode(to_string(m)) == m);
  for (auto r : {Regime::Linear, Regime::Relu}) CHECK(parse_regime(to_string(r)) == r);
  CHECK(error_code_of([] { parse_method("adam"); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("run with T = 0 returns only the initial checkpoint") {
  const int d = 4;
  const Vector x_true = gaussian_signal(d, 1);
  MeasurementStream stream(MeasurementModel(GaussianSphere{d}), NoCorruption{}, ResponseModel::Linear,
                           x_true, 1);
  SolverSpec spec;
  spec.d = d;
  spec.T = 0;
  spec.lambda = 1.01;
  RunOptions opts;
  opts.x_true = x_true;
  const auto tr = run(spec, stream, opts);
  REQUIRE(tr.checkpoints.size() == 1);
  CHECK(tr.checkpoints[0].k == 0);
  CHECK(*tr.checkpoints[0].relative_error == 1.0);
}

TEST_CASE("run checkpoints, determinism and dimension checks") {
  const int d = 10;
  const Vector x_true = gaussian_signal(d, 2);
  SolverSpec spec;
  spec.d = d;
  spec.T = 2500;
  spec.lambda = 1.001;
  spec.G = 2.0 * x_true.norm();
  RunOptions opts;
  opts.x_true = x_true;
  opts.checkpoint_every = 1000;
  opts.record_iterates = true;
  auto make_stream = [&] {
    return MeasurementStream(MeasurementModel(GaussianSphere{d}), SignFlip{0.2}, ResponseModel::Linear,
                             x_true, 5);
  };
  auto s1 = make_stream();
  auto s2 = make_stream();
  const auto a = run(spec, s1, opts);
  const auto b = run(spec, s2, opts);
  std::vector<long> ks;
  for (const auto& c : a.checkpoints) ks.push_back(c.k);
  CHECK(ks == std::vector<long>{0, 1000, 2000, 2500});
  REQUIRE(a.iterates.size() == 4);
  for (std::size_t i = 0; i < a.iterates.size(); ++i) CHECK(a.iterates[i] == b.iterates[i]);
  CHECK(*a.checkpoints.back().relative_error < 0.5);

  MeasurementStream wrong(MeasurementModel(GaussianSphere{d + 1}), NoCorruption{}, ResponseModel::Linear,
                          Vector::Ones(d + 1), 1);
  CHECK(error_code_of([&] { run(spec, wrong, opts); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("SGD-exp converges without corruption") {
  const int d = 10;
  const Vector x_true = gaussian_signal(d, 3);
  MeasurementStream stream(MeasurementModel(GaussianSphere{d}), NoCorruption{}, ResponseModel::Linear,
                           x_true, 3);
  SolverSpec spec;
  spec.d = d;
  spec.T = 10000;
  spec.lambda = 1.0001;
  spec.G = recommend_G(spec.lambda, x_true.norm());
  RunOptions opts;
  opts.x_true = x_true;
  const auto tr = run(spec, stream, opts);
  CHECK(*tr.checkpoints.back().relative_error < *tr.checkpoints.front().relative_error);
}

TEST_CASE("observer sees every step with the scheduled length") {
  const int d = 5;
  const Vector x_true = gaussian_signal(d, 4);
  MeasurementStream stream(MeasurementModel(GaussianSphere{d}), SignFlip{0.3}, ResponseModel::Linear,
                           x_true, 4);
  SolverSpec spec;
  spec.d = d;
  spec.T = 3000;
  spec.lambda = 1.002;
  spec.G = 0.7;
  long steps = 0, violations = 0;
  RunOptions opts;
  opts.observer = [&](const StepEvent& e) {
    const double len = spec.G * std::pow(spec.lambda, -double(e.k));
    const double moved = (e.x_after - e.x_before).norm();
    if (!(moved == 0.0 || std::abs(moved - len) <= 1e-12 * len)) ++violations;
    if (e.k != steps) ++violations;
    ++steps;
  };
  run(spec, stream, opts);
  CHECK(steps == 3000);
  CHECK(violations == 0);
}

TEST_CASE("positive scaling of the signal and step scale scales every iterate") {
  const int d = 4;
  const Vector x_true = gaussian_signal(d, 6);
  Rng rng = make_rng(6, Substream::Measurement);
  const MeasurementModel model(GaussianSphere{d});
  for (double c : {4.0, 0.125, 3.0}) {
    CAPTURE(c);
    SolverState s1 = SolverState::zero(d);
    SolverState s2 = SolverState::zero(d);
    Rng local = rng;
    for (int k = 0; k < 500; ++k) {
      const Vector a = sample_measurement(model, local);
      const double y = x_true.dot(a);
      s1 = step_sgd_exp_linear(s1, a, y, 0.5, 1.01);
      s2 = step_sgd_exp_linear(s2, a, c * y, c * 0.5, 1.01);
      if (c != 3.0)
        CHECK(s2.x == c * s1.x);
      else
        CHECK((s2.x - c * s1.x).norm() <= 1e-12 * (c * s1.x).norm());
    }
  }
}

TEST_CASE("recommend_lambda under Massart corruption") {
  const auto rec = recommend_lambda(100, 0.4, 200000, 225.0, kCtilde, CorruptionMode::Massart);
  CHECK(rel_close(rec.lambda_sq_minus_one, 7.596362749471633e-9, 1e-12));
  CHECK(rel_close(rec.lambda, 1.0000000037981813675, 1e-15));
  CHECK(rec.lambda > 1.0);
  CHECK(rec.g_min == 0.0);
  // R = 225 sits on the boundary of the linear bound's requirement R > 225.
  CHECK_FALSE(rec.preconditions_ok);
  const auto strong = recommend_lambda(100, 0.4, 200000, 900.0, kCtilde, CorruptionMode::Massart);
  CHECK(strong.preconditions_ok);
  CHECK(strong.warnings.empty());
  CHECK(rel_close(strong.lambda_sq_minus_one, 7.596362749471633e-9 / 4.0, 1e-12));
}

TEST_CASE("recommended lambda satisfies its defining identity") {
  for (double p : {0.0, 0.1, 0.3, 0.45}) {
    for (long T : {10L, 1000L, 200000L}) {
      for (int d : {10, 100}) {
        const auto rec = recommend_lambda(d, p, T, 900.0, kCtilde, CorruptionMode::Massart);
        const double lt = std::log(double(T));
        const double target = kCtilde * kCtilde * (1 - 2 * p) * (1 - 2 * p) / (900.0 * d * lt * lt);
        CHECK(rel_close(rec.lambda_sq_minus_one, target, 1e-12));
        CHECK(rel_close(lambda_excess(rec.lambda), target, 1e-6));
      }
    }
  }
}

TEST_CASE("oblivious lambda from the experimental coefficient") {
  const double e = lambda_excess_from_coefficient(2.0, 50, 0.9, 100000, CorruptionMode::Oblivious);
  CHECK(rel_close(e, 3.0177871521858229e-6, 1e-12));
  CHECK(rel_close(lambda_from_coefficient(2.0, 50, 0.9, 100000, CorruptionMode::Oblivious),
                  1.0000015088924377147, 1e-15));
}

TEST_CASE("recommend_lambda rejects invalid inputs and warns on weak R") {
  CHECK(error_code_of([] { recommend_lambda(100, 0.5, 1000, 900, kCtilde, CorruptionMode::Massart); }) ==
        ErrorCode::InvalidParameter);
  CHECK(error_code_of([] { recommend_lambda(100, 1.0, 1000, 900, kCtilde, CorruptionMode::Oblivious); }) ==
        ErrorCode::InvalidParameter);
  CHECK(error_code_of([] { recommend_lambda(100, 0.1, 1, 900, kCtilde, CorruptionMode::Massart); }) ==
        ErrorCode::InvalidParameter);
  CHECK(error_code_of([] { recommend_lambda(100, 0.1, 1000, 0, kCtilde, CorruptionMode::Massart); }) ==
        ErrorCode::InvalidParameter);
  CHECK(error_code_of([] { recommend_lambda(100, -0.1, 1000, 900, kCtilde, CorruptionMode::Massart); }) ==
        ErrorCode::InvalidParameter);
  const auto weak = recommend_lambda(100, 0.4, 1000, 225, kCtilde, CorruptionMode::Massart);
  CHECK_FALSE(weak.preconditions_ok);
  CHECK_FALSE(weak.warnings.empty());
  const auto small_d = recommend_lambda(1, 0.0, 1000, 900, kCtilde, CorruptionMode::Massart);
  CHECK_FALSE(small_d.preconditions_ok);
  const auto relu = recommend_lambda(100, 0.4, 1000, 400, kCtilde, CorruptionMode::Massart, Regime::Relu);
  CHECK_FALSE(relu.preconditions_ok);
}

TEST_CASE("recommend_G") {
  CHECK(recommend_G(std::sqrt(1.5), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(recommend_G(1.01, 0.0) == 0.0);
  CHECK(rel_close(recommend_G(1.00001, 5.0), 0.031622855658526477, 1e-9));
  CHECK(error_code_of([] { recommend_G(1.0, 1.0); }) == ErrorCode::InvalidParameter);
  CHECK(error_code_of([] { recommend_G(1.1, -1.0); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("margin factor") {
  CHECK(margin_factor(0.4, CorruptionMode::Massart) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(margin_factor(0.9, CorruptionMode::Oblivious) == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("GLM-Tron with decaying rates recovers the signal without corruption") {
  const int d = 100;
  const long T = 200000;
  const Vector x_true = gaussian_signal(d, 8);
  for (auto schedule : {GlmSchedule::Root, GlmSchedule::Exp}) {
    CAPTURE(to_string(schedule));
    MeasurementStream stream(MeasurementModel(GaussianSphere{d}), NoCorruption{}, ResponseModel::Relu,
                             x_true, 8);
    SolverSpec spec;
    spec.method = Method::GlmTron;
    spec.schedule = schedule;
    spec.d = d;
    spec.T = T;
    spec.m = 1;
    spec.lambda = 1.00003;
    RunOptions opts;
    opts.x_true = x_true;
    opts.checkpoint_every = T;
    const auto tr = run(spec, stream, opts);
    CHECK(*tr.checkpoints.back().relative_error <= 0.1 * *tr.checkpoints.front().relative_error);
  }
}

}  // TEST_SUITE
