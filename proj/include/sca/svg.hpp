#pragma once

// Minimal SVG line charts: mean MSE against SNR on a log10 y axis, one
// polyline per algorithm entry, optional shaded +-1 std band.

#include <sca/bench.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace sca {

struct SvgSeries {
  std::string label;
  std::vector<double> x, y, y_std;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace detail

inline std::string render_log_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                                    const std::vector<SvgSeries>& series) {
  const double w = 640, h = 420, left = 70, right = 170, top = 40, bottom = 50;
  double x0 = kInf, x1 = -kInf, l0 = kInf, l1 = -kInf;
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!(s.y[k] > 0.0)) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      l0 = std::min(l0, std::floor(std::log10(s.y[k])));
      l1 = std::max(l1, std::ceil(std::log10(s.y[k])));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, l0 = -1, l1 = 0;
  if (x1 == x0) x1 = x0 + 1;
  if (l1 == l0) l1 = l0 + 1;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (l1 - std::log10(y)) / (l1 - l0) * ph; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  using detail::svg_num;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << svg_num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
    << detail::svg_escape(title) << "</text>\n";
  for (double l = l0; l <= l1 + 0.5; l += 1.0) {
    const double yy = top + (l1 - l) / (l1 - l0) * ph;
    o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << svg_num(yy) << "\" y2=\"" << svg_num(yy)
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << svg_num(yy + 4) << "\" text-anchor=\"end\">1e" << static_cast<int>(l)
      << "</text>\n";
  }
  std::vector<double> ticks;
  for (const auto& s : series) ticks.insert(ticks.end(), s.x.begin(), s.x.end());
  std::sort(ticks.begin(), ticks.end());
  ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
  for (double x : ticks)
    o << "<text x=\"" << svg_num(px(x)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << x
      << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << svg_num(left + pw / 2) << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">"
    << detail::svg_escape(x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << svg_num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::svg_escape(y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const SvgSeries& s = series[i];
    const char* color = colors[i % 8];
    if (!s.y_std.empty()) {
      std::string upper, lower;
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!(s.y[k] > 0.0)) continue;
        const double hi = s.y[k] + s.y_std[k];
        const double lo = std::max(s.y[k] - s.y_std[k], std::pow(10.0, l0));
        upper += svg_num(px(s.x[k])) + "," + svg_num(py(std::min(hi, std::pow(10.0, l1)))) + " ";
        lower = svg_num(px(s.x[k])) + "," + svg_num(py(lo)) + " " + lower;
      }
      if (!upper.empty())
        o << "<polygon points=\"" << upper << lower << "\" fill=\"" << color << "\" fill-opacity=\"0.15\"/>\n";
    }
    std::string pts;
    for (std::size_t k = 0; k < s.x.size(); ++k)
      if (s.y[k] > 0.0) pts += svg_num(px(s.x[k])) + "," + svg_num(py(s.y[k])) + " ";
    o << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    const double ly = top + 14 + 18 * static_cast<double>(i);
    o << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 32 << "\" y1=\"" << svg_num(ly) << "\" y2=\""
      << svg_num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 38 << "\" y=\"" << svg_num(ly + 4) << "\">" << detail::svg_escape(s.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// One chart per (M, N): mean MSE over finite-SNR cells, one series per
/// (algorithm entry, T). Keys are "M<m>_N<n>".
inline std::map<std::string, std::string> mse_charts(const std::vector<AggregateRow>& rows) {
  std::map<std::pair<int, int>, std::map<std::string, SvgSeries>> by_dims;
  std::map<std::pair<int, int>, std::vector<std::string>> order;
  for (const auto& r : rows) {
    if (!std::isfinite(r.snr_db) || std::isnan(r.mse_mean)) continue;
    std::string label = r.algorithm;
    if (!std::isnan(r.lambda_or_tau)) {
      char buf[48];
      std::snprintf(buf, sizeof buf, " (%s=%g)", is_probabilistic(*parse_algorithm(r.algorithm)) ? "tau" : "lambda",
                    r.lambda_or_tau);
      label += buf;
    }
    label += " T=" + std::to_string(r.T);
    auto& group = by_dims[{r.M, r.N}];
    if (!group.count(label)) order[{r.M, r.N}].push_back(label);
    SvgSeries& s = group[label];
    s.label = label;
    s.x.push_back(r.snr_db);
    s.y.push_back(r.mse_mean);
    s.y_std.push_back(r.mse_std);
  }
  std::map<std::string, std::string> out;
  for (const auto& [dims, group] : by_dims) {
    std::vector<SvgSeries> series;
    for (const auto& label : order[dims]) series.push_back(group.at(label));
    const std::string key = "M" + std::to_string(dims.first) + "_N" + std::to_string(dims.second);
    out[key] = render_log_chart("MSE vs SNR, M=" + std::to_string(dims.first) + ", N=" + std::to_string(dims.second),
                                "SNR (dB)", "mean MSE", series);
  }
  return out;
}

}  // namespace sca
