// SPDX-License-Identifier: Apache-2.0
#include "rsgd/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rsgd/error.hpp"
#include "rsgd/results.hpp"

namespace rsgd {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(long v) {
  if (v != 0 && v % 1000 == 0) return std::to_string(v / 1000) + "k";
  return std::to_string(v);
}

}  // namespace

std::string render_svg(const std::vector<Aggregate>& series, const PlotOptions& o) {
  const double left = 80, right = 190, top = 40, bottom = 60;
  const double pw = o.width - left - right;
  const double ph = o.height - top - bottom;

  long k_max = 1;
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = 0.0;
  for (const auto& s : series) {
    const auto& vals = o.clean_loss ? s.mean_clean_loss : s.mean_relative_error;
    for (std::size_t i = 0; i < s.k.size(); ++i) {
      k_max = std::max(k_max, s.k[i]);
      if (vals[i] && *vals[i] > 0.0 && std::isfinite(*vals[i])) {
        y_lo = std::min(y_lo, *vals[i]);
        y_hi = std::max(y_hi, *vals[i]);
      }
    }
  }
  if (!(y_hi > 0.0)) {
    y_lo = 1e-3;
    y_hi = 1.0;
  }
  const int dec_lo = static_cast<int>(std::floor(std::log10(y_lo)));
  const int dec_hi = std::max(dec_lo + 1, static_cast<int>(std::ceil(std::log10(y_hi))));
  auto px = [&](double k) { return left + pw * k / static_cast<double>(k_max); };
  auto py = [&](double v) {
    const double lv = v > 0.0 ? std::clamp(std::log10(v), double(dec_lo), double(dec_hi))
                              : double(dec_lo);
    return top + ph * (dec_hi - lv) / (dec_hi - dec_lo);
  };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(o.width) +
         "\" height=\"" + std::to_string(o.height) + "\" viewBox=\"0 0 " +
         std::to_string(o.width) + " " + std::to_string(o.height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!o.title.empty())
    svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" " +
           "font-family=\"sans-serif\" font-size=\"16\">" + escape(o.title) + "</text>\n";

  svg += "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int dcd = dec_lo; dcd <= dec_hi; ++dcd) {
    const double y = py(std::pow(10.0, dcd));
    svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(y) + "\" x2=\"" + num(left + pw) +
           "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\"/>\n";
    svg += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y + 4) +
           "\" text-anchor=\"end\">1e" + std::to_string(dcd) + "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const long k = k_max * i / 5;
    const double x = px(static_cast<double>(k));
    svg += "<line x1=\"" + num(x) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(x) +
           "\" y2=\"" + num(top + ph + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(x) + "\" y=\"" + num(top + ph + 20) +
           "\" text-anchor=\"middle\">" + tick_label(k) + "</text>\n";
  }
  svg += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(o.height - 15.0) +
         "\" text-anchor=\"middle\">iteration k</text>\n";
  svg += "<text transform=\"translate(20," + num(top + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" +
         std::string(o.clean_loss ? "clean l2 loss" : "relative error") + " (log scale)</text>\n";
  svg += "</g>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& vals = o.clean_loss ? series[s].mean_clean_loss : series[s].mean_relative_error;
    const char* color = kPalette[s % kPalette.size()];
    std::string points;
    for (std::size_t i = 0; i < series[s].k.size(); ++i) {
      if (!vals[i]) continue;
      if (!points.empty()) points += ' ';
      points += num(px(static_cast<double>(series[s].k[i]))) + "," + num(py(*vals[i]));
    }
    svg += "<polyline class=\"series\" data-solver=\"" + escape(series[s].solver) +
           "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" + points +
           "\"/>\n";
    const double ly = top + 10 + 20.0 * static_cast<double>(s);
    svg += "<line x1=\"" + num(left + pw + 15) + "\" y1=\"" + num(ly) + "\" x2=\"" +
           num(left + pw + 40) + "\" y2=\"" + num(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(left + pw + 46) + "\" y=\"" + num(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(series[s].solver) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_plot(const std::vector<Trajectory>& trajectories, const std::string& path,
               const PlotOptions& options) {
  require(!trajectories.empty(), ErrorCode::InvalidParameter, "no trajectories to plot");
  const auto series = aggregate(trajectories);
  PlotOptions o = options;
  if (!o.clean_loss) {
    bool any_error = false;
    for (const auto& s : series)
      for (const auto& v : s.mean_relative_error) any_error = any_error || v.has_value();
    if (!any_error) o.clean_loss = true;
  }
  write_text_file(path, render_svg(series, o));
}

}  // namespace rsgd
