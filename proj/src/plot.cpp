#include "bifrom/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "bifrom/error.hpp"

namespace bifrom::plot {
namespace {

double parse_field(const std::string& s, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw Error(ErrorCode::InvalidConfig, "diagram csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Perceptually ordered dark-blue to yellow ramp, piecewise linear.
std::string color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

}  // namespace

eval::BifurcationDiagram read_diagram_csv(std::istream& in) {
  eval::BifurcationDiagram diagram;
  std::string line;
  if (!std::getline(in, line) || line != "mu1,mu2,observable,converged") {
    throw Error(ErrorCode::InvalidConfig, "diagram csv: unexpected header");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[4];
    for (auto& field : f) {
      if (!std::getline(ss, field, ',')) {
        throw Error(ErrorCode::InvalidConfig, "diagram csv line " + std::to_string(line_no) + ": expected 4 fields");
      }
    }
    eval::DiagramPoint p;
    p.mu1 = parse_field(f[0], line_no);
    p.mu2 = parse_field(f[1], line_no);
    p.observable = parse_field(f[2], line_no);
    p.converged = parse_field(f[3], line_no) != 0.0;
    diagram.points.push_back(p);
  }
  return diagram;
}

void write_svg(std::ostream& out, const eval::BifurcationDiagram& diagram) {
  std::map<double, int> mu1_index;
  std::map<double, int> mu2_index;
  for (const eval::DiagramPoint& p : diagram.points) {
    mu1_index.emplace(p.mu1, 0);
    mu2_index.emplace(p.mu2, 0);
  }
  const int n1 = static_cast<int>(mu1_index.size());
  const int n2 = static_cast<int>(mu2_index.size());
  if (diagram.points.empty() || static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2) != diagram.points.size()) {
    throw Error(ErrorCode::DimensionMismatch, "plot: diagram points do not form a tensor grid");
  }
  int i = 0;
  for (auto& [value, idx] : mu1_index) idx = i++;
  i = 0;
  for (auto& [value, idx] : mu2_index) idx = i++;

  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const eval::DiagramPoint& p : diagram.points) {
    if (!p.converged || !std::isfinite(p.observable)) continue;
    lo = first ? p.observable : std::min(lo, p.observable);
    hi = first ? p.observable : std::max(hi, p.observable);
    first = false;
  }
  const double span = hi > lo ? hi - lo : 1.0;

  const double left = 70, top = 20, plot_w = 480, plot_h = 400, bar_w = 18, gap = 20;
  const double cell_w = plot_w / n1;
  const double cell_h = plot_h / n2;
  const double width = left + plot_w + gap + bar_w + 70;
  const double height = top + plot_h + 60;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width) << "\" height=\"" << px(height)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const eval::DiagramPoint& p : diagram.points) {
    const double x = left + mu1_index[p.mu1] * cell_w;
    const double y = top + (n2 - 1 - mu2_index[p.mu2]) * cell_h;
    const std::string fill = p.converged ? color((p.observable - lo) / span) : std::string("#9e9e9e");
    out << "<rect x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(cell_w + 0.5) << "\" height=\""
        << px(cell_h + 0.5) << "\" fill=\"" << fill << "\"/>\n";
  }
  out << "<rect x=\"" << px(left) << "\" y=\"" << px(top) << "\" width=\"" << px(plot_w) << "\" height=\""
      << px(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";

  const double mu1_lo = mu1_index.begin()->first, mu1_hi = mu1_index.rbegin()->first;
  const double mu2_lo = mu2_index.begin()->first, mu2_hi = mu2_index.rbegin()->first;
  out << "<text x=\"" << px(left) << "\" y=\"" << px(top + plot_h + 18) << "\">" << num(mu1_lo) << "</text>\n";
  out << "<text x=\"" << px(left + plot_w) << "\" y=\"" << px(top + plot_h + 18) << "\" text-anchor=\"end\">"
      << num(mu1_hi) << "</text>\n";
  out << "<text x=\"" << px(left + plot_w / 2) << "\" y=\"" << px(top + plot_h + 40)
      << "\" text-anchor=\"middle\">mu1</text>\n";
  out << "<text x=\"" << px(left - 6) << "\" y=\"" << px(top + plot_h) << "\" text-anchor=\"end\">" << num(mu2_lo)
      << "</text>\n";
  out << "<text x=\"" << px(left - 6) << "\" y=\"" << px(top + 12) << "\" text-anchor=\"end\">" << num(mu2_hi)
      << "</text>\n";
  out << "<text x=\"" << px(left - 40) << "\" y=\"" << px(top + plot_h / 2) << "\" text-anchor=\"middle\">mu2</text>\n";

  const double bar_x = left + plot_w + gap;
  constexpr int steps = 64;
  for (int s = 0; s < steps; ++s) {
    const double y = top + plot_h * (1.0 - static_cast<double>(s + 1) / steps);
    out << "<rect x=\"" << px(bar_x) << "\" y=\"" << px(y) << "\" width=\"" << px(bar_w) << "\" height=\""
        << px(plot_h / steps + 0.5) << "\" fill=\"" << color((s + 0.5) / steps) << "\"/>\n";
  }
  out << "<text x=\"" << px(bar_x + bar_w + 4) << "\" y=\"" << px(top + 12) << "\">" << num(hi) << "</text>\n";
  out << "<text x=\"" << px(bar_x + bar_w + 4) << "\" y=\"" << px(top + plot_h) << "\">" << num(lo) << "</text>\n";
  out << "</svg>\n";
}

void write_columns(std::ostream& out, const eval::BifurcationDiagram& diagram) {
  out << "mu1 mu2 value\n";
  for (const eval::DiagramPoint& p : diagram.points) {
    out << eval::format_double(p.mu1) << ' ' << eval::format_double(p.mu2) << ' ' << eval::format_double(p.observable)
        << '\n';
  }
}

}  // namespace bifrom::plot
