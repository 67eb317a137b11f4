// SPDX-License-Identifier: Apache-2.0
#include "rsgd/experiment.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "rsgd/error.hpp"
#include "rsgd/numeric.hpp"
#include "rsgd/stream.hpp"

namespace rsgd {

namespace {

constexpr long kCtildeSamples = 200000;

bool needs_lambda(const SolverConfig& s) {
  return s.method == Method::SgdExpLinear || s.method == Method::SgdExpRelu ||
         (s.method == Method::GlmTron && s.schedule == GlmSchedule::Exp);
}

Regime regime_of(ResponseModel r) { return r == ResponseModel::Relu ? Regime::Relu : Regime::Linear; }

double resolve_lambda(const SolverConfig& s, const ExperimentConfig& c, int d, double ctilde,
                      std::vector<std::string>& warnings) {
  struct V {
    const SolverConfig& s;
    const ExperimentConfig& c;
    int d;
    double ctilde;
    std::vector<std::string>& warnings;
    double operator()(const LambdaFixed& f) const { return f.value; }
    double operator()(const LambdaRecommend& r) const {
      const ParamRecommendation rec =
          recommend_lambda(d, corruption_probability(c.corruption), c.T, r.R, ctilde, c.mode,
                           regime_of(c.response));
      for (const auto& w : rec.warnings) warnings.push_back(s.name + ": " + w);
      return rec.lambda;
    }
    double operator()(const LambdaCoefficient& k) const {
      return lambda_from_coefficient(k.coefficient, d, corruption_probability(c.corruption), c.T,
                                     c.mode);
    }
  };
  return std::visit(V{s, c, d, ctilde, warnings}, s.lambda);
}

SolverSpec resolve_spec(const SolverConfig& s, const ExperimentConfig& c, int d, double lambda,
                        double exp_lambda, double x_norm, long rows) {
  SolverSpec spec;
  spec.name = s.name;
  spec.method = s.method;
  spec.schedule = s.schedule;
  spec.T = c.T;
  spec.d = d;
  spec.lambda = needs_lambda(s) ? lambda : 1.0;
  const double bound = c.x_norm_bound.value_or(x_norm);
  if (s.G) {
    spec.G = *s.G;
  } else if (s.method == Method::SgdExpLinear || s.method == Method::SgdExpRelu) {
    spec.G = s.G_scale * recommend_G(spec.lambda, bound);
    require(spec.G > 0.0, ErrorCode::InvalidParameter,
            s.name + ": automatic G is zero; set G or x_norm_bound");
  } else if (exp_lambda > 1.0) {
    // Without an explicit G, other methods share the automatic scale of the
    // experiment's first SGD-exp solver.
    spec.G = s.G_scale * recommend_G(exp_lambda, bound);
  } else {
    spec.G = bound > 0.0 ? s.G_scale * bound : 1.0;
  }
  spec.gamma = s.gamma.value_or(spec.G);
  spec.m = s.m.value_or(rows > 0 ? rows : 1);
  return spec;
}

}  // namespace

Vector planted_signal(int d, std::uint64_t seed, SignalLaw law) {
  require(d >= 1, ErrorCode::InvalidParameter, "dimension must be >= 1");
  Rng rng = make_rng(seed, Substream::Signal);
  std::normal_distribution<double> normal;
  Vector x(d);
  for (int i = 0; i < d; ++i) x[i] = normal(rng);
  if (law == SignalLaw::UnitSphere) x /= x.norm();
  return x;
}

double resolve_ctilde(const ExperimentConfig& c) {
  if (c.ctilde) return *c.ctilde;
  if (std::holds_alternative<GaussianSphere>(c.measurement)) return std::sqrt(2.0 / std::numbers::pi);
  require(!std::holds_alternative<DatasetRows>(c.measurement), ErrorCode::InvalidParameter,
          "dataset experiments need an explicit ctilde when lambda is recommended");
  Rng rng = make_rng(c.seeds.front(), Substream::Directions);
  return estimate_ctilde(MeasurementModel(c.measurement), kDefaultCtildeDirections,
                         kCtildeSamples, rng)
      .value;
}

DatasetMatrix load_dataset(const DatasetConfig& config) {
  return load_csv(config.path, config.features, config.response, config.preprocess,
                  config.delimiter);
}

ExperimentResult plan_experiment(const ExperimentConfig& config) {
  require(!config.seeds.empty(), ErrorCode::InvalidParameter, "at least one seed is required");
  require(!config.solvers.empty(), ErrorCode::InvalidParameter, "at least one solver is required");
  validate(config.corruption);

  ExperimentResult result;
  result.config = config;
  result.fingerprint = fingerprint(config);

  bool unit_rows = true;
  int d = config.d;
  std::optional<Vector> reference;
  if (config.dataset) {
    auto data = std::make_shared<DatasetMatrix>(load_dataset(*config.dataset));
    d = static_cast<int>(data->features.cols());
    require(config.d == 0 || config.d == d, ErrorCode::DimensionMismatch,
            "configured d differs from the dataset feature count");
    for (Eigen::Index i = 0; i < data->features.rows() && unit_rows; ++i)
      unit_rows = std::abs(data->features.row(i).norm() - 1.0) <= kUnitNormTolerance;
    const Vector ls = least_squares_baseline(*data);
    DatasetSummary summary;
    summary.rows = static_cast<long>(data->features.rows());
    summary.d = d;
    summary.least_squares_loss = evaluate_clean_loss(ls, *data);
    summary.least_squares_norm = ls.norm();
    result.dataset = summary;
    reference = ls;
    result.data = std::move(data);
    result.config.d = d;
  }

  const bool any_recommend = [&] {
    for (const auto& s : config.solvers)
      if (needs_lambda(s) && std::holds_alternative<LambdaRecommend>(s.lambda)) return true;
    return false;
  }();
  result.ctilde = any_recommend || config.ctilde ? resolve_ctilde(config) : 0.0;

  std::vector<double> lambdas;
  for (const auto& s : config.solvers)
    lambdas.push_back(needs_lambda(s) ? resolve_lambda(s, config, d, result.ctilde, result.warnings)
                                      : 1.0);

  double exp_lambda = 0.0;
  for (std::size_t i = 0; i < config.solvers.size() && exp_lambda == 0.0; ++i)
    if (config.solvers[i].method == Method::SgdExpLinear ||
        config.solvers[i].method == Method::SgdExpRelu)
      exp_lambda = lambdas[i];

  const std::size_t n_seeds = config.seeds.size();
  const std::size_t n_cells = config.solvers.size() * n_seeds;
  result.cells.resize(n_cells);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    const std::size_t si = cell / n_seeds;
    const std::uint64_t seed = config.seeds[cell % n_seeds];
    CellInfo& info = result.cells[cell];
    info.solver = config.solvers[si].name;
    info.seed = seed;
    info.x_norm = reference ? reference->norm() : planted_signal(d, seed, config.signal).norm();
    info.spec = resolve_spec(config.solvers[si], config, d, lambdas[si], exp_lambda, info.x_norm,
                             result.data ? static_cast<long>(result.data->features.rows()) : 0);
    info.spec.allow_non_unit = !unit_rows;
    validate(info.spec);
  }
  if (config.response == ResponseModel::Relu && config.metric_clean_loss && !config.dataset)
    result.warnings.push_back("clean_l2_loss is not defined for synthetic ReLU streams");
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ExperimentHooks& hooks) {
  ExperimentResult result = plan_experiment(config);
  const int d = result.config.d;
  const std::size_t n_cells = result.cells.size();
  result.trajectories.resize(n_cells);
  const ResponseModel response = config.response;
  const bool relu_response = response == ResponseModel::Relu;

  std::shared_ptr<const Matrix> rows;
  std::optional<Vector> reference;
  if (result.data) {
    rows = std::shared_ptr<const Matrix>(result.data, &result.data->features);
    reference = least_squares_baseline(*result.data);
  }

  parallel_for(n_cells, [&](std::size_t cell) {
    const CellInfo& info = result.cells[cell];
    RunOptions opts;
    opts.checkpoint_every = config.checkpoint_every;
    opts.seed = info.seed;
    if (hooks.observer_for) opts.observer = hooks.observer_for(info);

    std::optional<MeasurementStream> stream;
    if (rows) {
      const Vector& responses = result.data->responses;
      stream.emplace(DatasetRows{rows}, responses, config.corruption, response, info.seed);
      if (config.metric_relative_error) opts.x_true = *reference;
      if (config.metric_clean_loss)
        opts.clean_loss = [&rows, &responses, relu_response](const Vector& x) {
          return evaluate_clean_loss(x, *rows, responses, relu_response);
        };
    } else {
      Vector x_true = planted_signal(d, info.seed, config.signal);
      stream.emplace(MeasurementModel(config.measurement), config.corruption, response, x_true,
                     info.seed);
      if (config.metric_clean_loss && !relu_response) {
        // Population loss E<x - x_true, a>^2 = ||x - x_true||^2 / d for
        // isotropic unit-norm measurements.
        opts.clean_loss = [x_true, d](const Vector& x) {
          return (x - x_true).squaredNorm() / static_cast<double>(d);
        };
      }
      if (config.metric_relative_error) opts.x_true = std::move(x_true);
    }
    Trajectory traj = run(info.spec, *stream, opts);
    traj.solver = info.solver;
    traj.fingerprint = result.fingerprint;
    if (!config.output.timing)
      for (auto& cp : traj.checkpoints) cp.elapsed_seconds = 0.0;
    result.trajectories[cell] = std::move(traj);
  });
  return result;
}

std::vector<Aggregate> aggregate(const std::vector<Trajectory>& trajectories) {
  std::vector<Aggregate> out;
  std::vector<std::vector<NeumaierSum>> err_sums, loss_sums;
  std::vector<std::vector<std::size_t>> err_counts, loss_counts;
  for (const auto& t : trajectories) {
    std::size_t idx = out.size();
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i].solver == t.solver) idx = i;
    if (idx == out.size()) {
      Aggregate a;
      a.solver = t.solver;
      for (const auto& cp : t.checkpoints) a.k.push_back(cp.k);
      out.push_back(std::move(a));
      err_sums.emplace_back(t.checkpoints.size());
      loss_sums.emplace_back(t.checkpoints.size());
      err_counts.emplace_back(t.checkpoints.size(), 0);
      loss_counts.emplace_back(t.checkpoints.size(), 0);
    }
    Aggregate& a = out[idx];
    require(a.k.size() == t.checkpoints.size(), ErrorCode::InvalidParameter,
            "trajectories of '" + t.solver + "' have different checkpoints");
    for (std::size_t i = 0; i < t.checkpoints.size(); ++i) {
      const Checkpoint& cp = t.checkpoints[i];
      require(cp.k == a.k[i], ErrorCode::InvalidParameter,
              "trajectories of '" + t.solver + "' have different checkpoints");
      if (cp.relative_error) {
        err_sums[idx][i].add(*cp.relative_error);
        ++err_counts[idx][i];
      }
      if (cp.clean_loss) {
        loss_sums[idx][i].add(*cp.clean_loss);
        ++loss_counts[idx][i];
      }
    }
    ++a.n_seeds;
  }
  for (std::size_t s = 0; s < out.size(); ++s) {
    Aggregate& a = out[s];
    for (std::size_t i = 0; i < a.k.size(); ++i) {
      a.mean_relative_error.push_back(
          err_counts[s][i] ? std::optional<double>(err_sums[s][i].value() /
                                                   static_cast<double>(err_counts[s][i]))
                           : std::nullopt);
      a.mean_clean_loss.push_back(
          loss_counts[s][i] ? std::optional<double>(loss_sums[s][i].value() /
                                                    static_cast<double>(loss_counts[s][i]))
                            : std::nullopt);
    }
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& config, const std::vector<double>& p_grid,
                      const std::vector<std::uint64_t>& seed_grid) {
  require(!p_grid.empty(), ErrorCode::InvalidParameter, "p grid must be nonempty");
  require(!seed_grid.empty(), ErrorCode::InvalidParameter, "seed grid must be nonempty");
  require(!std::holds_alternative<NoCorruption>(config.corruption), ErrorCode::InvalidParameter,
          "a sweep over p needs a corruption type other than none");
  SweepResult out;
  out.fingerprint = fingerprint(config);
  out.p_grid = p_grid;
  out.seeds = seed_grid;
  for (const double p : p_grid) {
    ExperimentConfig c = config;
    c.corruption = with_probability(config.corruption, p);
    c.seeds = seed_grid;
    validate(c.corruption);
    ExperimentResult r = run_experiment(c);
    for (const Aggregate& a : aggregate(r.trajectories))
      for (std::size_t i = 0; i < a.k.size(); ++i)
        out.rows.push_back({p, a.solver, a.k[i], a.mean_relative_error[i], a.mean_clean_loss[i],
                            a.n_seeds});
    out.experiments.push_back(std::move(r));
  }
  return out;
}

}  // namespace rsgd
