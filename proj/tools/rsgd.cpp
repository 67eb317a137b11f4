// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: run and sweep experiments, check drift bounds,
// estimate C~, preprocess datasets and plot results.
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rsgd/config.hpp"
#include "rsgd/dataset.hpp"
#include "rsgd/drift.hpp"
#include "rsgd/error.hpp"
#include "rsgd/experiment.hpp"
#include "rsgd/plot.hpp"
#include "rsgd/results.hpp"

namespace {

using rsgd::ErrorCode;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
};

void say(const Globals& g, const std::string& line) {
  if (!g.quiet) std::cout << line << '\n';
}

// Output directory: --out-dir, then RSGD_OUT_DIR, then the config value.
std::string output_dir(const Globals& g, const rsgd::ExperimentConfig& config) {
  if (!g.out_dir.empty()) return g.out_dir;
  if (const char* env = std::getenv("RSGD_OUT_DIR"); env && *env) return env;
  return config.output.dir;
}

std::string in_dir(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

rsgd::ExperimentConfig load_with_overrides(const std::string& path, const Globals& g) {
  rsgd::ExperimentConfig config = rsgd::load_config(path);
  if (g.seed) config.seeds = {*g.seed};
  return config;
}

int cmd_run(const Globals& g, const std::string& config_path) {
  const rsgd::ExperimentConfig config = load_with_overrides(config_path, g);
  const rsgd::ExperimentResult result = rsgd::run_experiment(config);
  const std::string dir = output_dir(g, config);
  const std::string prefix = config.output.prefix;
  const std::string csv = in_dir(dir, prefix + "_results.csv");
  const std::string manifest = in_dir(dir, prefix + "_manifest.json");
  const std::string svg = in_dir(dir, prefix + "_plot.svg");
  rsgd::write_results_csv(result.trajectories, csv);
  rsgd::write_text_file(manifest, rsgd::make_manifest(result).dump(2) + "\n");
  rsgd::emit_plot(result.trajectories, svg, {config.name});
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& a : rsgd::aggregate(result.trajectories)) {
    std::ostringstream line;
    line << a.solver << ": k=" << (a.k.empty() ? 0 : a.k.back());
    if (!a.mean_relative_error.empty() && a.mean_relative_error.back())
      line << " mean_relative_error=" << *a.mean_relative_error.back();
    if (!a.mean_clean_loss.empty() && a.mean_clean_loss.back())
      line << " mean_clean_loss=" << *a.mean_clean_loss.back();
    say(g, line.str());
  }
  say(g, "wrote " + csv + ", " + manifest + ", " + svg);
  return 0;
}

int cmd_sweep(const Globals& g, const std::string& config_path, const std::vector<double>& p_grid,
              std::vector<std::uint64_t> seeds) {
  const rsgd::ExperimentConfig config = load_with_overrides(config_path, g);
  if (seeds.empty()) seeds = config.seeds;
  const rsgd::SweepResult sweep = rsgd::run_sweep(config, p_grid, seeds);
  const std::string dir = output_dir(g, config);
  const std::string csv = in_dir(dir, config.output.prefix + "_sweep.csv");
  const std::string manifest = in_dir(dir, config.output.prefix + "_sweep_manifest.json");
  rsgd::write_text_file(csv, rsgd::format_sweep_csv(sweep));
  rsgd::write_text_file(manifest, rsgd::make_sweep_manifest(sweep).dump(2) + "\n");
  for (const auto& row : sweep.rows)
    if (row.k == config.T && row.mean_relative_error)
      say(g, "p=" + rsgd::format_double(row.p) + " " + row.solver +
                 " mean_relative_error=" + rsgd::format_double(*row.mean_relative_error));
  say(g, "wrote " + csv + ", " + manifest);
  return 0;
}

struct DriftCheckArgs {
  int states = 20;
  long samples = 100000;
  long hitting_runs = 0;
  double R = 900.0;
};

int cmd_drift_check(const Globals& g, const std::string& config_path, const DriftCheckArgs& args) {
  const rsgd::ExperimentConfig config = load_with_overrides(config_path, g);
  const rsgd::ExperimentResult plan = rsgd::plan_experiment(config);
  const rsgd::CellInfo* cell = nullptr;
  for (const auto& c : plan.cells)
    if (c.spec.method == rsgd::Method::SgdExpLinear || c.spec.method == rsgd::Method::SgdExpRelu) {
      cell = &c;
      break;
    }
  rsgd::require(cell != nullptr, ErrorCode::InvalidParameter,
                "drift-check needs an sgd_exp_linear or sgd_exp_relu solver");
  rsgd::require(!config.dataset, ErrorCode::InvalidParameter,
                "drift-check needs a synthetic measurement model");
  const rsgd::Regime regime =
      config.response == rsgd::ResponseModel::Relu ? rsgd::Regime::Relu : rsgd::Regime::Linear;
  const double ctilde = plan.ctilde > 0.0 ? plan.ctilde : rsgd::resolve_ctilde(config);
  const double p = rsgd::corruption_probability(config.corruption);
  const int d = plan.config.d;
  const std::uint64_t seed = g.seed.value_or(config.seeds.front());

  const rsgd::DriftParams params =
      rsgd::drift_params(cell->spec.lambda, p, d, ctilde, regime, config.mode);
  nlohmann::json report;
  report["fingerprint"] = plan.fingerprint;
  report["solver"] = cell->solver;
  report["params"] = rsgd::to_json(params);
  report["c_star_floor"] = rsgd::c_star_floor(params);
  const rsgd::HittingBound hb = rsgd::hitting_bound(params, config.T);
  report["hitting_bound"] = {{"K", config.T}, {"raw", hb.raw}, {"clamped", hb.clamped}};
  if (config.T >= 2 && rsgd::margin_factor(p, config.mode) > 0.0) {
    report["theorem_error_bound"] =
        rsgd::theorem_error_bound(cell->spec.G, ctilde, args.R, d, p, config.T, config.mode);
    report["theorem_failure_probability"] =
        rsgd::theorem_failure_probability(d, p, config.T, args.R, ctilde, regime, config.mode);
    report["R"] = args.R;
  }

  bool all_pass = true;
  if (regime == rsgd::Regime::Linear && args.states > 0) {
    report["linear_term"] = nlohmann::json::array();
    for (const double u2 : rsgd::band_states(params, args.states)) {
      rsgd::DriftQuery q;
      q.u_norm_sq = u2;
      q.p = p;
      q.lambda = cell->spec.lambda;
      q.d = d;
      q.ctilde = ctilde;
      q.model = rsgd::MeasurementModel(config.measurement);
      q.n_samples = args.samples;
      q.seed = seed;
      q.mode = config.mode;
      const rsgd::DriftTermReport r = rsgd::mc_drift_linear_term(q);
      all_pass = all_pass && r.pass;
      report["linear_term"].push_back(rsgd::to_json(r));
    }
  }
  if (args.hitting_runs > 0) {
    rsgd::HittingExperiment ex;
    ex.params = params;
    ex.model = rsgd::MeasurementModel(config.measurement);
    ex.x_true = rsgd::planted_signal(d, seed, config.signal);
    ex.G = cell->spec.G;
    ex.K = config.T;
    ex.n_runs = args.hitting_runs;
    ex.seed = seed;
    const rsgd::HittingReport r = rsgd::mc_hitting_probability(ex);
    all_pass = all_pass && r.consistent;
    report["hitting"] = rsgd::to_json(r);
  }
  report["all_pass"] = all_pass;

  const std::string path = in_dir(output_dir(g, config), config.output.prefix + "_drift.json");
  rsgd::write_text_file(path, report.dump(2) + "\n");
  say(g, report.dump(2));
  say(g, "wrote " + path);
  return all_pass ? 0 : 3;
}

struct CtildeArgs {
  std::string model = "gaussian_sphere";
  std::string base = "uniform";
  int d = 0;
  long samples = 100000;
  int directions = rsgd::kDefaultCtildeDirections;
};

int cmd_ctilde(const Globals& g, const CtildeArgs& a) {
  rsgd::MeasurementModel::Variant v = rsgd::GaussianSphere{a.d};
  if (a.model == "rademacher")
    v = rsgd::NormalizedRademacher{a.d};
  else if (a.model == "iid_subgaussian")
    v = rsgd::NormalizedIIDSubGaussian{a.d, rsgd::parse_subgaussian_base(a.base)};
  else
    rsgd::require(a.model == "gaussian_sphere", ErrorCode::InvalidParameter,
                  "model must be gaussian_sphere, rademacher or iid_subgaussian");
  rsgd::Rng rng = rsgd::make_rng(g.seed.value_or(1), rsgd::Substream::Directions);
  const rsgd::CtildeEstimate e =
      rsgd::estimate_ctilde(rsgd::MeasurementModel(v), a.directions, a.samples, rng);
  nlohmann::json j{{"model", a.model},
                   {"d", a.d},
                   {"samples", e.n_samples},
                   {"directions", e.n_directions},
                   {"ctilde", e.value},
                   {"stderr", e.stderr_value},
                   {"gaussian_reference", std::sqrt(2.0 / std::numbers::pi)}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct PrepArgs {
  std::string csv;
  std::string response;
  std::vector<std::string> features;
  std::string delimiter = ",";
  bool center = false;
  bool z_score = false;
  bool row_normalize = false;
  bool center_response = false;
  std::string output;
};

int cmd_dataset_prep(const Globals& g, const PrepArgs& a) {
  rsgd::require(a.delimiter.size() == 1, ErrorCode::InvalidParameter,
                "delimiter must be a single character");
  rsgd::PreprocessFlags flags{a.center, a.z_score, a.row_normalize, a.center_response};
  const rsgd::DatasetMatrix data =
      rsgd::load_csv(a.csv, a.features, a.response, flags, a.delimiter[0]);
  const rsgd::Vector ls = rsgd::least_squares_baseline(data);
  std::string out;
  for (const auto& name : data.feature_names) out += name + ",";
  out += data.response_name + "\n";
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.features.cols(); ++j)
      out += rsgd::format_double(data.features(i, j)) + ",";
    out += rsgd::format_double(data.responses[i]) + "\n";
  }
  const std::string path = a.output.empty()
                               ? in_dir(g.out_dir.empty() ? "." : g.out_dir, "prepared.csv")
                               : a.output;
  rsgd::write_text_file(path, out);
  say(g, "rows=" + std::to_string(data.features.rows()) +
             " features=" + std::to_string(data.features.cols()) +
             " least_squares_loss=" + rsgd::format_double(rsgd::evaluate_clean_loss(ls, data)));
  say(g, "wrote " + path);
  return 0;
}

int cmd_plot(const Globals& g, const std::string& csv, const std::string& svg,
             const std::string& title, bool clean_loss) {
  const auto trajectories = rsgd::read_results_csv(csv);
  rsgd::PlotOptions o;
  o.title = title;
  o.clean_loss = clean_loss;
  rsgd::emit_plot(trajectories, svg, o);
  say(g, "wrote " + svg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust streaming regression with exponentially decaying step sizes"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Override the seed(s)");
  app.add_option("--out-dir", g.out_dir, "Output directory (overrides RSGD_OUT_DIR and config)");
  app.add_flag("--quiet", g.quiet, "Suppress progress output");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run every (solver, seed) cell of a config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();

  std::vector<double> p_grid;
  std::vector<std::uint64_t> seed_grid;
  auto* sweep = app.add_subcommand("sweep", "Run a config over a grid of corruption probabilities");
  sweep->add_option("config", config_path, "Experiment config (JSON)")->required();
  sweep->add_option("--p", p_grid, "Corruption probabilities")->delimiter(',')->required();
  sweep->add_option("--seeds", seed_grid, "Seeds (default: the config's)")->delimiter(',');

  DriftCheckArgs drift_args;
  auto* drift = app.add_subcommand("drift-check", "Compute drift constants and check them by Monte Carlo");
  drift->add_option("config", config_path, "Experiment config (JSON)")->required();
  drift->add_option("--states", drift_args.states, "States in [a, b) for the linear-term check");
  drift->add_option("--samples", drift_args.samples, "Samples per state");
  drift->add_option("--hitting-runs", drift_args.hitting_runs, "Runs for the hitting-time check");
  drift->add_option("--R", drift_args.R, "R for the error bound and failure term");

  CtildeArgs ct;
  auto* ctilde = app.add_subcommand("ctilde", "Estimate the measurement constant C~");
  ctilde->add_option("--model", ct.model, "gaussian_sphere, rademacher or iid_subgaussian");
  ctilde->add_option("--base", ct.base, "Base law for iid_subgaussian");
  ctilde->add_option("--d", ct.d, "Dimension")->required()->check(CLI::PositiveNumber);
  ctilde->add_option("--samples", ct.samples, "Monte Carlo samples");
  ctilde->add_option("--directions", ct.directions, "Random directions");

  PrepArgs prep;
  auto* dataset = app.add_subcommand("dataset", "Dataset utilities");
  dataset->require_subcommand(1);
  auto* dprep = dataset->add_subcommand("prep", "Load, preprocess and write a dataset");
  dprep->add_option("csv", prep.csv, "Input CSV")->required();
  dprep->add_option("--response", prep.response, "Response column")->required();
  dprep->add_option("--features", prep.features, "Feature columns (default: all others)")
      ->delimiter(',');
  dprep->add_option("--delimiter", prep.delimiter, "Field delimiter");
  dprep->add_flag("--center", prep.center, "Center feature columns");
  dprep->add_flag("--z-score", prep.z_score, "Standardize feature columns");
  dprep->add_flag("--row-normalize", prep.row_normalize, "Scale rows to unit norm");
  dprep->add_flag("--center-response", prep.center_response, "Center the response");
  dprep->add_option("-o,--output", prep.output, "Output CSV");

  std::string plot_csv, plot_svg, plot_title;
  bool plot_loss = false;
  auto* plot = app.add_subcommand("plot", "Plot a results CSV as a semilog SVG");
  plot->add_option("results", plot_csv, "Results CSV")->required();
  plot->add_option("-o,--output", plot_svg, "Output SVG")->required();
  plot->add_option("--title", plot_title, "Chart title");
  plot->add_flag("--clean-loss", plot_loss, "Plot clean loss instead of relative error");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed_value;

  try {
    if (*run) return cmd_run(g, config_path);
    if (*sweep) return cmd_sweep(g, config_path, p_grid, seed_grid);
    if (*drift) return cmd_drift_check(g, config_path, drift_args);
    if (*ctilde) return cmd_ctilde(g, ct);
    if (*dprep) return cmd_dataset_prep(g, prep);
    if (*plot) return cmd_plot(g, plot_csv, plot_svg, plot_title, plot_loss);
  } catch (const rsgd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
