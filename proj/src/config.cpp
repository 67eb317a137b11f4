// SPDX-License-Identifier: Apache-2.0
#include "rsgd/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "rsgd/error.hpp"

namespace rsgd {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Schema, "'" + path + "' " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) schema(path.empty() ? "<root>" : path, "must be an object");
}

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  check_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) schema(join(path, it.key()), "is not a recognized key");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) schema(path, "must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema(path, "must be finite");
  return v;
}

long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) schema(path, "must be an integer");
  return j.get<long>();
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) schema(path, "must be a boolean");
  return j.get<bool>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) schema(path, "must be a string");
  return j.get<std::string>();
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) schema(path, "must be positive");
  return v;
}

// Runs parse(value) and converts library errors into schema errors at path.
template <class F>
auto at_path(const std::string& path, F parse) {
  try {
    return parse();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Schema) throw;
    schema(path, e.what());
  }
}

NoiseLaw parse_noise(const json& j, const std::string& path) {
  check_keys(j, path, {"law", "variance", "half_width"});
  const std::string law = j.contains("law") ? text(j["law"], join(path, "law")) : "uniform";
  if (law == "gaussian") {
    if (j.contains("half_width")) schema(join(path, "half_width"), "does not apply to gaussian");
    if (!j.contains("variance")) schema(join(path, "variance"), "is required");
    return GaussianNoise{positive(j["variance"], join(path, "variance"))};
  }
  if (law != "uniform" && law != "truncated_normal")
    schema(join(path, "law"), "must be uniform, gaussian or truncated_normal");
  if (j.contains("variance")) schema(join(path, "variance"), "does not apply to " + law);
  if (!j.contains("half_width")) schema(join(path, "half_width"), "is required");
  const double m = positive(j["half_width"], join(path, "half_width"));
  if (law == "uniform") return UniformNoise{m};
  return TruncatedNormalNoise{m};
}

json noise_json(const NoiseLaw& law) {
  struct V {
    json operator()(const UniformNoise& u) const {
      return {{"law", "uniform"}, {"half_width", u.half_width}};
    }
    json operator()(const GaussianNoise& g) const {
      return {{"law", "gaussian"}, {"variance", g.variance}};
    }
    json operator()(const TruncatedNormalNoise& t) const {
      return {{"law", "truncated_normal"}, {"half_width", t.half_width}};
    }
  };
  return std::visit(V{}, law);
}

CorruptionSpec parse_corruption(const json& j, const std::string& path) {
  check_keys(j, path, {"type", "p", "noise"});
  if (!j.contains("type")) schema(join(path, "type"), "is required");
  const std::string type = text(j["type"], join(path, "type"));
  if (type == "none") {
    if (j.contains("p") || j.contains("noise")) schema(path, "of type none takes no parameters");
    return NoCorruption{};
  }
  if (!j.contains("p")) schema(join(path, "p"), "is required");
  const double p = number(j["p"], join(path, "p"));
  if (p < 0.0 || p > 1.0) schema(join(path, "p"), "must lie in [0, 1], got " + std::to_string(p));
  if (type != "additive_oblivious" && j.contains("noise"))
    schema(join(path, "noise"), "applies only to additive_oblivious");
  if (type == "sign_flip") return SignFlip{p};
  if (type == "residual_sign") return ResidualSignAdversary{p};
  if (type == "additive_oblivious") {
    AdditiveOblivious ob{p, UniformNoise{}};
    if (j.contains("noise")) ob.noise = parse_noise(j["noise"], join(path, "noise"));
    return ob;
  }
  schema(join(path, "type"), "must be none, sign_flip, residual_sign or additive_oblivious");
}

json corruption_json(const CorruptionSpec& spec) {
  json j{{"type", corruption_name(spec)}};
  if (!std::holds_alternative<NoCorruption>(spec)) j["p"] = corruption_probability(spec);
  if (const auto* ob = std::get_if<AdditiveOblivious>(&spec)) j["noise"] = noise_json(ob->noise);
  return j;
}

MeasurementModel::Variant parse_measurement(const json& j, const std::string& path, int d) {
  check_keys(j, path, {"model", "base"});
  const std::string model =
      j.contains("model") ? text(j["model"], join(path, "model")) : "gaussian_sphere";
  if (model != "iid_subgaussian" && j.contains("base"))
    schema(join(path, "base"), "applies only to iid_subgaussian");
  if (model == "gaussian_sphere") return GaussianSphere{d};
  if (model == "rademacher") return NormalizedRademacher{d};
  if (model == "iid_subgaussian") {
    NormalizedIIDSubGaussian m{d, SubGaussianBase::Uniform};
    if (j.contains("base"))
      m.base = at_path(join(path, "base"),
                       [&] { return parse_subgaussian_base(text(j["base"], join(path, "base"))); });
    return m;
  }
  if (model == "dataset") return DatasetRows{};
  schema(join(path, "model"), "must be gaussian_sphere, rademacher, iid_subgaussian or dataset");
}

json measurement_json(const MeasurementModel::Variant& v) {
  struct V {
    json operator()(const GaussianSphere&) const { return {{"model", "gaussian_sphere"}}; }
    json operator()(const NormalizedRademacher&) const { return {{"model", "rademacher"}}; }
    json operator()(const NormalizedIIDSubGaussian& m) const {
      return {{"model", "iid_subgaussian"}, {"base", to_string(m.base)}};
    }
    json operator()(const DatasetRows&) const { return {{"model", "dataset"}}; }
  };
  return std::visit(V{}, v);
}

LambdaRule parse_lambda(const json& j, const std::string& path) {
  if (j.is_number()) return LambdaFixed{number(j, path)};
  check_keys(j, path, {"rule", "R", "coefficient"});
  if (!j.contains("rule")) schema(join(path, "rule"), "is required");
  const std::string rule = text(j["rule"], join(path, "rule"));
  if (rule == "recommend") {
    if (j.contains("coefficient")) schema(join(path, "coefficient"), "does not apply to recommend");
    LambdaRecommend r;
    if (j.contains("R")) r.R = positive(j["R"], join(path, "R"));
    return r;
  }
  if (rule == "coefficient") {
    if (j.contains("R")) schema(join(path, "R"), "does not apply to coefficient");
    LambdaCoefficient c;
    if (j.contains("coefficient"))
      c.coefficient = positive(j["coefficient"], join(path, "coefficient"));
    return c;
  }
  schema(join(path, "rule"), "must be recommend or coefficient");
}

json lambda_json(const LambdaRule& rule) {
  struct V {
    json operator()(const LambdaFixed& f) const { return f.value; }
    json operator()(const LambdaRecommend& r) const { return {{"rule", "recommend"}, {"R", r.R}}; }
    json operator()(const LambdaCoefficient& c) const {
      return {{"rule", "coefficient"}, {"coefficient", c.coefficient}};
    }
  };
  return std::visit(V{}, rule);
}

std::optional<double> parse_auto(const json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() != "auto") schema(path, "must be a positive number or \"auto\"");
    return std::nullopt;
  }
  return positive(j, path);
}

SolverConfig parse_solver(const json& j, const std::string& path) {
  check_keys(j, path, {"name", "method", "schedule", "lambda", "G", "G_scale", "gamma", "m"});
  SolverConfig s;
  if (!j.contains("method")) schema(join(path, "method"), "is required");
  s.method = at_path(join(path, "method"),
                     [&] { return parse_method(text(j["method"], join(path, "method"))); });
  if (j.contains("schedule")) {
    if (s.method != Method::GlmTron) schema(join(path, "schedule"), "applies only to glmtron");
    s.schedule = at_path(join(path, "schedule"), [&] {
      return parse_glm_schedule(text(j["schedule"], join(path, "schedule")));
    });
  }
  const bool needs_lambda = s.method == Method::SgdExpLinear || s.method == Method::SgdExpRelu ||
                            (s.method == Method::GlmTron && s.schedule == GlmSchedule::Exp);
  if (j.contains("lambda")) {
    if (!needs_lambda) schema(join(path, "lambda"), "does not apply to this method");
    s.lambda = parse_lambda(j["lambda"], join(path, "lambda"));
    if (const auto* f = std::get_if<LambdaFixed>(&s.lambda); f && !(f->value > 1.0))
      schema(join(path, "lambda"), "must exceed 1");
  } else if (needs_lambda) {
    schema(join(path, "lambda"), "is required for this method");
  }
  if (j.contains("G")) s.G = parse_auto(j["G"], join(path, "G"));
  if (j.contains("G_scale")) s.G_scale = positive(j["G_scale"], join(path, "G_scale"));
  if (j.contains("gamma")) s.gamma = parse_auto(j["gamma"], join(path, "gamma"));
  if (j.contains("m")) {
    if (s.method != Method::GlmTron) schema(join(path, "m"), "applies only to glmtron");
    s.m = integer(j["m"], join(path, "m"));
    if (*s.m < 1) schema(join(path, "m"), "must be >= 1");
  }
  if (j.contains("name")) {
    s.name = text(j["name"], join(path, "name"));
  } else {
    s.name = to_string(s.method);
    if (s.method == Method::GlmTron) s.name += "_" + to_string(s.schedule);
  }
  return s;
}

json solver_json(const SolverConfig& s) {
  json j{{"name", s.name}, {"method", to_string(s.method)}};
  if (s.method == Method::GlmTron) j["schedule"] = to_string(s.schedule);
  const bool needs_lambda = s.method == Method::SgdExpLinear || s.method == Method::SgdExpRelu ||
                            (s.method == Method::GlmTron && s.schedule == GlmSchedule::Exp);
  if (needs_lambda) j["lambda"] = lambda_json(s.lambda);
  j["G"] = s.G ? json(*s.G) : json("auto");
  j["G_scale"] = s.G_scale;
  j["gamma"] = s.gamma ? json(*s.gamma) : json("auto");
  if (s.m) j["m"] = *s.m;
  return j;
}

DatasetConfig parse_dataset(const json& j, const std::string& path) {
  check_keys(j, path, {"path", "features", "response", "delimiter", "center", "z_score",
                       "row_normalize", "center_response"});
  DatasetConfig c;
  if (!j.contains("path")) schema(join(path, "path"), "is required");
  if (!j.contains("response")) schema(join(path, "response"), "is required");
  c.path = text(j["path"], join(path, "path"));
  c.response = text(j["response"], join(path, "response"));
  if (j.contains("features")) {
    const json& f = j["features"];
    if (!f.is_array()) schema(join(path, "features"), "must be an array of column names");
    for (std::size_t i = 0; i < f.size(); ++i)
      c.features.push_back(text(f[i], join(path, "features[" + std::to_string(i) + "]")));
  }
  if (j.contains("delimiter")) {
    const std::string d = text(j["delimiter"], join(path, "delimiter"));
    if (d.size() != 1) schema(join(path, "delimiter"), "must be a single character");
    c.delimiter = d[0];
  }
  if (j.contains("center")) c.preprocess.center = boolean(j["center"], join(path, "center"));
  if (j.contains("z_score")) c.preprocess.z_score = boolean(j["z_score"], join(path, "z_score"));
  if (j.contains("row_normalize"))
    c.preprocess.row_normalize = boolean(j["row_normalize"], join(path, "row_normalize"));
  if (j.contains("center_response"))
    c.preprocess.center_response = boolean(j["center_response"], join(path, "center_response"));
  return c;
}

json dataset_json(const DatasetConfig& c) {
  return {{"path", c.path},
          {"features", c.features},
          {"response", c.response},
          {"delimiter", std::string(1, c.delimiter)},
          {"center", c.preprocess.center},
          {"z_score", c.preprocess.z_score},
          {"row_normalize", c.preprocess.row_normalize},
          {"center_response", c.preprocess.center_response}};
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  check_keys(j, "", {"name", "d", "T", "seeds", "seed", "checkpoint_every", "measurement",
                     "corruption", "mode", "response", "signal", "ctilde", "x_norm_bound",
                     "solvers", "metrics", "dataset", "output"});
  ExperimentConfig c;
  if (j.contains("name")) c.name = text(j["name"], "name");
  if (j.contains("dataset")) c.dataset = parse_dataset(j["dataset"], "dataset");

  if (j.contains("d")) {
    const long d = integer(j["d"], "d");
    if (d < 1) schema("d", "must be >= 1");
    c.d = static_cast<int>(d);
  } else if (c.dataset && !c.dataset->features.empty()) {
    c.d = static_cast<int>(c.dataset->features.size());
  } else if (!c.dataset) {
    schema("d", "is required");
  } else {
    c.d = 0;
  }
  if (c.dataset && !c.dataset->features.empty() &&
      static_cast<std::size_t>(c.d) != c.dataset->features.size())
    schema("d", "disagrees with the number of dataset features");

  if (!j.contains("T")) schema("T", "is required");
  c.T = integer(j["T"], "T");
  if (c.T < 0) schema("T", "must be >= 0");

  if (j.contains("seeds") && j.contains("seed")) schema("seed", "conflicts with 'seeds'");
  if (j.contains("seeds")) {
    const json& s = j["seeds"];
    if (!s.is_array() || s.empty()) schema("seeds", "must be a nonempty array of integers");
    c.seeds.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string p = "seeds[" + std::to_string(i) + "]";
      if (!s[i].is_number_unsigned() && !(s[i].is_number_integer() && s[i].get<long>() >= 0))
        schema(p, "must be a nonnegative integer");
      c.seeds.push_back(s[i].get<std::uint64_t>());
    }
  } else if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long>() < 0)
      schema("seed", "must be a nonnegative integer");
    c.seeds = {j["seed"].get<std::uint64_t>()};
  }

  if (j.contains("checkpoint_every")) {
    c.checkpoint_every = integer(j["checkpoint_every"], "checkpoint_every");
    if (c.checkpoint_every < 1) schema("checkpoint_every", "must be >= 1");
  }

  c.measurement = j.contains("measurement")
                      ? parse_measurement(j["measurement"], "measurement", c.d)
                      : (c.dataset ? MeasurementModel::Variant{DatasetRows{}}
                                   : MeasurementModel::Variant{GaussianSphere{c.d}});
  const bool dataset_model = std::holds_alternative<DatasetRows>(c.measurement);
  if (dataset_model && !c.dataset) schema("measurement.model", "dataset requires a 'dataset' block");
  if (!dataset_model && c.dataset) schema("measurement.model", "must be dataset with a 'dataset' block");

  if (j.contains("corruption")) c.corruption = parse_corruption(j["corruption"], "corruption");
  c.mode = std::holds_alternative<AdditiveOblivious>(c.corruption) ? CorruptionMode::Oblivious
                                                                   : CorruptionMode::Massart;
  if (j.contains("mode"))
    c.mode = at_path("mode", [&] { return parse_corruption_mode(text(j["mode"], "mode")); });

  if (j.contains("response")) {
    const std::string r = text(j["response"], "response");
    if (r == "linear")
      c.response = ResponseModel::Linear;
    else if (r == "relu")
      c.response = ResponseModel::Relu;
    else
      schema("response", "must be linear or relu");
  }
  if (j.contains("signal")) {
    const std::string s = text(j["signal"], "signal");
    if (s == "gaussian")
      c.signal = SignalLaw::Gaussian;
    else if (s == "unit_sphere")
      c.signal = SignalLaw::UnitSphere;
    else
      schema("signal", "must be gaussian or unit_sphere");
  }
  if (j.contains("ctilde")) c.ctilde = positive(j["ctilde"], "ctilde");
  if (j.contains("x_norm_bound")) c.x_norm_bound = positive(j["x_norm_bound"], "x_norm_bound");

  if (!j.contains("solvers")) schema("solvers", "is required");
  const json& sv = j["solvers"];
  if (!sv.is_array() || sv.empty()) schema("solvers", "must be a nonempty array");
  for (std::size_t i = 0; i < sv.size(); ++i)
    c.solvers.push_back(parse_solver(sv[i], "solvers[" + std::to_string(i) + "]"));
  for (std::size_t i = 0; i < c.solvers.size(); ++i)
    for (std::size_t k = 0; k < i; ++k)
      if (c.solvers[i].name == c.solvers[k].name)
        schema("solvers[" + std::to_string(i) + "].name", "duplicates '" + c.solvers[i].name + "'");

  if (j.contains("metrics")) {
    const json& m = j["metrics"];
    if (!m.is_array() || m.empty()) schema("metrics", "must be a nonempty array");
    c.metric_relative_error = false;
    c.metric_clean_loss = false;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string p = "metrics[" + std::to_string(i) + "]";
      const std::string name = text(m[i], p);
      if (name == "relative_error")
        c.metric_relative_error = true;
      else if (name == "clean_l2_loss")
        c.metric_clean_loss = true;
      else
        schema(p, "must be relative_error or clean_l2_loss");
    }
  }

  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, "output", {"dir", "prefix", "timing"});
    if (o.contains("dir")) c.output.dir = text(o["dir"], "output.dir");
    if (o.contains("prefix")) c.output.prefix = text(o["prefix"], "output.prefix");
    if (o.contains("timing")) c.output.timing = boolean(o["timing"], "output.timing");
  }
  return c;
}

ExperimentConfig parse_config_text(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  return parse_config(j);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + std::string(e.what()));
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  if (!c.dataset || c.d > 0) j["d"] = c.d;
  j["T"] = c.T;
  j["seeds"] = c.seeds;
  j["checkpoint_every"] = c.checkpoint_every;
  j["measurement"] = measurement_json(c.measurement);
  j["corruption"] = corruption_json(c.corruption);
  j["mode"] = to_string(c.mode);
  j["response"] = c.response == ResponseModel::Linear ? "linear" : "relu";
  j["signal"] = c.signal == SignalLaw::Gaussian ? "gaussian" : "unit_sphere";
  if (c.ctilde) j["ctilde"] = *c.ctilde;
  if (c.x_norm_bound) j["x_norm_bound"] = *c.x_norm_bound;
  j["solvers"] = json::array();
  for (const auto& s : c.solvers) j["solvers"].push_back(solver_json(s));
  j["metrics"] = json::array();
  if (c.metric_relative_error) j["metrics"].push_back("relative_error");
  if (c.metric_clean_loss) j["metrics"].push_back("clean_l2_loss");
  if (c.dataset) j["dataset"] = dataset_json(*c.dataset);
  j["output"] = {{"dir", c.output.dir}, {"prefix", c.output.prefix}, {"timing", c.output.timing}};
  return j;
}

std::uint64_t fnv1a64(const std::string& bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fingerprint(const ExperimentConfig& config) {
  json j = to_json(config);
  j.erase("output");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace rsgd
