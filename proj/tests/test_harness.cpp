// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "doctest.h"
#include "rsgd/experiment.hpp"
#include "rsgd/plot.hpp"
#include "rsgd/results.hpp"
#include "support.hpp"

using namespace rsgd;
using rsgd::test::error_code_of;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.name = "small";
  c.d = 8;
  c.T = 3000;
  c.seeds = {1, 2};
  c.checkpoint_every = 1000;
  c.measurement = GaussianSphere{8};
  c.corruption = SignFlip{0.2};
  c.metric_clean_loss = true;
  SolverConfig s;
  s.name = "sgd_exp";
  s.lambda = LambdaFixed{1.001};
  c.solvers.push_back(s);
  c.output.timing = false;
  return c;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rsgd_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("two seeds and one solver give two trajectories whose aggregate is their mean") {
  const auto result = run_experiment(small_config());
  REQUIRE(result.trajectories.size() == 2);
  CHECK(result.trajectories[0].seed == 1);
  CHECK(result.trajectories[1].seed == 2);
  const auto agg = aggregate(result.trajectories);
  REQUIRE(agg.size() == 1);
  CHECK(agg[0].n_seeds == 2);
  CHECK(agg[0].k == std::vector<long>{0, 1000, 2000, 3000});
  for (std::size_t i = 0; i < agg[0].k.size(); ++i) {
    const double e0 = *result.trajectories[0].checkpoints[i].relative_error;
    const double e1 = *result.trajectories[1].checkpoints[i].relative_error;
    CHECK(*agg[0].mean_relative_error[i] == doctest::Approx((e0 + e1) / 2.0).epsilon(1e-15));
    const double l0 = *result.trajectories[0].checkpoints[i].clean_loss;
    const double l1 = *result.trajectories[1].checkpoints[i].clean_loss;
    CHECK(*agg[0].mean_clean_loss[i] == doctest::Approx((l0 + l1) / 2.0).epsilon(1e-15));
  }
  for (const auto& t : result.trajectories) {
    CHECK(t.fingerprint == result.fingerprint);
    for (std::size_t i = 1; i < t.checkpoints.size(); ++i) CHECK(t.checkpoints[i].k > t.checkpoints[i - 1].k);
  }
}

TEST_CASE("the same configuration produces byte-identical files") {
  const auto dir = scratch("determinism");
  for (int rep = 0; rep < 2; ++rep) {
    const auto result = run_experiment(small_config());
    write_results_csv(result.trajectories, (dir / ("r" + std::to_string(rep) + ".csv")).string());
    write_text_file((dir / ("m" + std::to_string(rep) + ".json")).string(), make_manifest(result).dump(2));
    emit_plot(result.trajectories, (dir / ("p" + std::to_string(rep) + ".svg")).string());
  }
  CHECK(read_file(dir / "r0.csv") == read_file(dir / "r1.csv"));
  CHECK(read_file(dir / "m0.json") == read_file(dir / "m1.json"));
  CHECK(read_file(dir / "p0.svg") == read_file(dir / "p1.svg"));
  fs::remove_all(dir);
}

TEST_CASE("automatic step scale and lambda rules are resolved per solver") {
  auto c = small_config();
  SolverConfig rec;
  rec.name = "recommended";
  rec.lambda = LambdaRecommend{900};
  SolverConfig root;
  root.name = "root";
  root.method = Method::SgdRootLinear;
  c.solvers.push_back(rec);
  c.solvers.push_back(root);
  const auto plan = plan_experiment(c);
  REQUIRE(plan.cells.size() == 6);
  CHECK(plan.ctilde == doctest::Approx(std::sqrt(2.0 / std::numbers::pi)).epsilon(1e-15));
  const auto& first = plan.cells[0];
  const Vector x = planted_signal(8, 1, SignalLaw::Gaussian);
  CHECK(first.x_norm == doctest::Approx(x.norm()).epsilon(1e-15));
  CHECK(first.spec.G == doctest::Approx(recommend_G(1.001, x.norm())).epsilon(1e-15));
  const auto& recommended = plan.cells[2];
  const auto r = recommend_lambda(8, 0.2, 3000, 900, plan.ctilde, CorruptionMode::Massart);
  CHECK(recommended.spec.lambda == r.lambda);
  const auto& root_cell = plan.cells[4];
  CHECK(root_cell.spec.gamma == doctest::Approx(first.spec.G).epsilon(1e-15));
  CHECK(plan.trajectories.empty());
}

TEST_CASE("planted signals and C~ resolution") {
  const Vector unit = planted_signal(5, 3, SignalLaw::UnitSphere);
  CHECK(unit.norm() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(planted_signal(5, 3, SignalLaw::Gaussian) == planted_signal(5, 3, SignalLaw::Gaussian));
  auto c = small_config();
  c.ctilde = 0.5;
  CHECK(resolve_ctilde(c) == 0.5);
  c.ctilde.reset();
  c.measurement = NormalizedRademacher{8};
  const double est = resolve_ctilde(c);
  CHECK(est > 0.5);
  CHECK(est < 1.0);
}

TEST_CASE("results CSV layout and round trip") {
  Trajectory t;
  t.solver = "sgd_exp";
  t.seed = 7;
  t.checkpoints = {{0, 1.0, std::nullopt, 0.0}, {10, 0.1 + 0.2, 2.5e-300, 0.125}, {20, 1e-17, 3.0, 1.5}};
  const std::string csv = format_results_csv({t});
  CHECK(count(csv, "\n") == 4);
  CHECK(csv.rfind(kResultsHeader, 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  const auto back = parse_results_csv(csv);
  REQUIRE(back.size() == 1);
  CHECK(back[0].solver == t.solver);
  CHECK(back[0].seed == t.seed);
  REQUIRE(back[0].checkpoints.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[0].checkpoints[i].k == t.checkpoints[i].k);
    CHECK(back[0].checkpoints[i].relative_error == t.checkpoints[i].relative_error);
    CHECK(back[0].checkpoints[i].clean_loss == t.checkpoints[i].clean_loss);
    CHECK(back[0].checkpoints[i].elapsed_seconds == t.checkpoints[i].elapsed_seconds);
  }
  CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
  CHECK(format_double(1.0) == "1");
  CHECK(error_code_of([] { parse_results_csv("bad,header\n"); }) == ErrorCode::Parse);
}

TEST_CASE("results files round trip through disk and report write failures") {
  const auto result = run_experiment(small_config());
  const auto dir = scratch("roundtrip");
  const std::string path = (dir / "nested" / "out.csv").string();
  write_results_csv(result.trajectories, path);
  const auto back = read_results_csv(path);
  REQUIRE(back.size() == result.trajectories.size());
  for (std::size_t s = 0; s < back.size(); ++s) {
    for (std::size_t i = 0; i < back[s].checkpoints.size(); ++i) {
      CHECK(back[s].checkpoints[i].relative_error == result.trajectories[s].checkpoints[i].relative_error);
      CHECK(back[s].checkpoints[i].clean_loss == result.trajectories[s].checkpoints[i].clean_loss);
    }
  }
  CHECK(error_code_of([] { write_results_csv({}, "/tmp/never.csv"); }) == ErrorCode::InvalidParameter);
  std::ofstream(dir / "blocker") << "x";
  CHECK(error_code_of([&] { write_results_csv(result.trajectories, (dir / "blocker" / "a.csv").string()); }) ==
        ErrorCode::Io);
  CHECK(error_code_of([] { emit_plot({}, "/tmp/never.svg"); }) == ErrorCode::InvalidParameter);
  fs::remove_all(dir);
}

TEST_CASE("manifest contents") {
  const auto result = run_experiment(small_config());
  const auto m = make_manifest(result);
  CHECK(m["fingerprint"] == result.fingerprint);
  CHECK(m["seeds"].size() == 2);
  CHECK(m.contains("config"));
  CHECK(m.contains("summary"));
  CHECK(parse_config(m["config"]).T == 3000);
}

TEST_CASE("SVG has one polyline per solver") {
  auto c = small_config();
  SolverConfig root;
  root.name = "root & co";
  root.method = Method::SgdRootLinear;
  c.solvers.push_back(root);
  const auto result = run_experiment(c);
  const std::string svg = render_svg(aggregate(result.trajectories), {"title <x>"});
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(count(svg, "<polyline class=\"series\"") == 2);
  CHECK(count(svg, "<svg") == 1);
  CHECK(count(svg, "</svg>") == 1);
  CHECK(svg.find("root &amp; co") != std::string::npos);
  CHECK(svg.find("title &lt;x&gt;") != std::string::npos);
  CHECK(svg.find("iteration k") != std::string::npos);
  CHECK(svg.find("(log scale)") != std::string::npos);
  CHECK(count(svg, "<") == count(svg, ">"));
}

TEST_CASE("aggregate rejects mismatched checkpoints") {
  Trajectory a, b;
  a.solver = b.solver = "s";
  a.checkpoints = {{0, 1.0, std::nullopt, 0.0}};
  b.checkpoints = {{5, 1.0, std::nullopt, 0.0}};
  CHECK(error_code_of([&] { aggregate({a, b}); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("sweep means equal the per-seed arithmetic means") {
  auto c = small_config();
  c.T = 1000;
  c.checkpoint_every = 500;
  const auto sweep = run_sweep(c, {0.0, 0.3}, {4, 5, 6});
  REQUIRE(sweep.experiments.size() == 2);
  CHECK(sweep.rows.size() == 2 * 3);
  for (const auto& row : sweep.rows) {
    const std::size_t which = row.p == 0.0 ? 0 : 1;
    const auto& trs = sweep.experiments[which].trajectories;
    REQUIRE(trs.size() == 3);
    double sum = 0.0;
    for (const auto& t : trs)
      for (const auto& cp : t.checkpoints)
        if (cp.k == row.k) sum += *cp.relative_error;
    CHECK(*row.mean_relative_error == doctest::Approx(sum / 3.0).epsilon(1e-14));
    CHECK(row.n_seeds == 3);
  }
  const std::string csv = format_sweep_csv(sweep);
  CHECK(csv.rfind("p,solver,k,mean_relative_error,mean_clean_loss,n_seeds\n", 0) == 0);
  CHECK(count(csv, "\n") == 7);
  auto none = c;
  none.corruption = NoCorruption{};
  CHECK(error_code_of([&] { run_sweep(none, {0.1}, {1}); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("dataset experiments sample rows and report clean loss") {
  const auto dir = scratch("dataset");
  const fs::path csv = dir / "data.csv";
  {
    std::ofstream out(csv);
    out << "u,v,w,target\n";
    Rng rng = make_rng(1, Substream::Measurement);
    std::normal_distribution<double> normal;
    for (int i = 0; i < 300; ++i) {
      const double u = normal(rng), v = normal(rng), w = normal(rng);
      out << u << "," << v << "," << w << "," << (0.5 * u - v + 0.25 * w + 0.1 * normal(rng)) << "\n";
    }
  }
  ExperimentConfig c;
  c.name = "data";
  c.T = 3000;
  c.seeds = {1};
  c.checkpoint_every = 1000;
  c.measurement = DatasetRows{};
  c.corruption = AdditiveOblivious{0.2, UniformNoise{30}};
  c.metric_relative_error = false;
  c.metric_clean_loss = true;
  DatasetConfig dc;
  dc.path = csv.string();
  dc.response = "target";
  dc.preprocess.z_score = true;
  dc.preprocess.center_response = true;
  c.dataset = dc;
  c.d = 3;
  SolverConfig s;
  s.name = "sgd_exp";
  s.lambda = LambdaFixed{1.001};
  c.solvers.push_back(s);
  c.output.timing = false;
  const auto result = run_experiment(c);
  REQUIRE(result.dataset.has_value());
  CHECK(result.dataset->rows == 300);
  CHECK(result.dataset->d == 3);
  const auto& cps = result.trajectories[0].checkpoints;
  CHECK_FALSE(cps.front().relative_error.has_value());
  CHECK(*cps.back().clean_loss < *cps.front().clean_loss);
  CHECK(*cps.back().clean_loss >= result.dataset->least_squares_loss * (1.0 - 1e-12));
  fs::remove_all(dir);
}

}  // TEST_SUITE
