// SPDX-License-Identifier: Apache-2.0
#include "rsgd/results.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rsgd/error.hpp"

namespace rsgd {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  require(ec == std::errc(), ErrorCode::InvalidParameter, "cannot format number");
  return std::string(buf, ptr);
}

namespace {

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(!s.empty() && ec == std::errc() && ptr == s.data() + s.size(), ErrorCode::NonNumericCell,
          where + ": non-numeric value '" + s + "'");
  return v;
}

template <class Int>
Int to_integer(const std::string& s, const std::string& where) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(!s.empty() && ec == std::errc() && ptr == s.data() + s.size(), ErrorCode::NonNumericCell,
          where + ": non-integer value '" + s + "'");
  return v;
}

std::optional<double> mean_at_end(const Aggregate& a, bool loss) {
  const auto& v = loss ? a.mean_clean_loss : a.mean_relative_error;
  return v.empty() ? std::nullopt : v.back();
}

}  // namespace

std::string format_results_csv(const std::vector<Trajectory>& trajectories) {
  std::string out = kResultsHeader;
  out += '\n';
  for (const auto& t : trajectories)
    for (const auto& cp : t.checkpoints) {
      out += t.solver;
      out += ',';
      out += std::to_string(t.seed);
      out += ',';
      out += std::to_string(cp.k);
      out += ',';
      out += optional_cell(cp.relative_error);
      out += ',';
      out += optional_cell(cp.clean_loss);
      out += ',';
      out += format_double(cp.elapsed_seconds);
      out += '\n';
    }
  return out;
}

std::vector<Trajectory> parse_results_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::EmptyDataset,
          origin + ": empty results file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == kResultsHeader, ErrorCode::Parse, origin + ": unexpected header '" + line + "'");
  std::vector<Trajectory> out;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    const auto cells = split_commas(line);
    require(cells.size() == 6, ErrorCode::Parse, where + ": expected 6 cells");
    const auto seed = to_integer<std::uint64_t>(cells[1], where);
    if (out.empty() || out.back().solver != cells[0] || out.back().seed != seed) {
      Trajectory t;
      t.solver = cells[0];
      t.seed = seed;
      out.push_back(std::move(t));
    }
    Checkpoint cp;
    cp.k = to_integer<long>(cells[2], where);
    if (!cells[3].empty()) cp.relative_error = to_double(cells[3], where);
    if (!cells[4].empty()) cp.clean_loss = to_double(cells[4], where);
    cp.elapsed_seconds = to_double(cells[5], where);
    out.back().checkpoints.push_back(cp);
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write '" + path + "'");
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorCode::Io, "write to '" + path + "' failed");
}

void write_results_csv(const std::vector<Trajectory>& trajectories, const std::string& path) {
  require(!trajectories.empty(), ErrorCode::InvalidParameter, "no trajectories to write");
  write_text_file(path, format_results_csv(trajectories));
}

std::vector<Trajectory> read_results_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_results_csv(buf.str(), path);
}

json make_manifest(const ExperimentResult& r) {
  json j;
  j["fingerprint"] = r.fingerprint;
  j["config"] = to_json(r.config);
  j["seeds"] = r.config.seeds;
  if (r.ctilde > 0.0) j["ctilde"] = r.ctilde;
  j["cells"] = json::array();
  for (const auto& c : r.cells)
    j["cells"].push_back({{"solver", c.solver},
                          {"seed", c.seed},
                          {"method", to_string(c.spec.method)},
                          {"lambda", c.spec.lambda},
                          {"G", c.spec.G},
                          {"gamma", c.spec.gamma},
                          {"m", c.spec.m},
                          {"x_norm", c.x_norm}});
  j["summary"] = json::array();
  for (const Aggregate& a : aggregate(r.trajectories)) {
    json s{{"solver", a.solver}, {"n_seeds", a.n_seeds}, {"final_k", a.k.empty() ? 0 : a.k.back()}};
    const auto err = mean_at_end(a, false);
    const auto loss = mean_at_end(a, true);
    s["mean_final_relative_error"] = err ? json(*err) : json(nullptr);
    s["mean_final_clean_loss"] = loss ? json(*loss) : json(nullptr);
    j["summary"].push_back(s);
  }
  if (r.dataset)
    j["dataset"] = {{"rows", r.dataset->rows},
                    {"d", r.dataset->d},
                    {"least_squares_loss", r.dataset->least_squares_loss},
                    {"least_squares_norm", r.dataset->least_squares_norm}};
  j["warnings"] = r.warnings;
  return j;
}

std::string format_sweep_csv(const SweepResult& sweep) {
  std::string out = "p,solver,k,mean_relative_error,mean_clean_loss,n_seeds\n";
  for (const auto& row : sweep.rows) {
    out += format_double(row.p) + ',' + row.solver + ',' + std::to_string(row.k) + ',' +
           optional_cell(row.mean_relative_error) + ',' + optional_cell(row.mean_clean_loss) + ',' +
           std::to_string(row.n_seeds) + '\n';
  }
  return out;
}

json make_sweep_manifest(const SweepResult& sweep) {
  json j;
  j["fingerprint"] = sweep.fingerprint;
  j["p_grid"] = sweep.p_grid;
  j["seeds"] = sweep.seeds;
  j["experiments"] = json::array();
  for (const auto& e : sweep.experiments) j["experiments"].push_back(make_manifest(e));
  return j;
}

}  // namespace rsgd
