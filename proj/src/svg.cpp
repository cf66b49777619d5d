#include "fairtrain/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fairtrain {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
      const double pad = std::abs(hi) > 0.0 ? 0.1 * std::abs(hi) : 1.0;
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render_svg(const SvgPlot& plot) {
  bool any = false;
  Range xr, yr;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series '" + s.label + "' has mismatched x and y");
    if (!s.x.empty()) any = true;
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  if (!any) throw std::invalid_argument("plot has no data");
  for (const auto& b : plot.bands) {
    if (b.x.size() != b.lower.size() || b.x.size() != b.upper.size()) throw std::invalid_argument("band sizes differ");
    for (double v : b.lower) yr.add(v);
    for (double v : b.upper) yr.add(v);
  }
  for (double v : plot.reference_lines) yr.add(v);
  xr.settle();
  yr.settle();

  const double left = 70, right = 20, top = 40, bottom = 50;
  const double w = plot.width - left - right;
  const double h = plot.height - top - bottom;
  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * w; };
  auto py = [&](double y) { return top + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * h; };
  auto clamp_y = [&](double y) { return std::isfinite(y) ? y : (y > 0 ? yr.hi : yr.lo); };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\"" << plot.height
      << "\" viewBox=\"0 0 " << plot.width << ' ' << plot.height << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << plot.width << "\" height=\"" << plot.height << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(left + w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(plot.title) << "</text>\n";

  // Axes and ticks.
  out << "<g stroke=\"black\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + h) << "\" x2=\"" << num(left + w) << "\" y2=\""
      << num(top + h) << "\"/>\n";
  out << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\"" << num(top + h)
      << "\"/>\n";
  out << "</g>\n<g font-size=\"11\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 5.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 5.0;
    out << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << num(top + h) << "\" x2=\"" << num(px(xv)) << "\" y2=\""
        << num(top + h + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + h + 18) << "\" text-anchor=\"middle\">"
        << tick_label(xv) << "</text>\n";
    out << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << num(left) << "\" y2=\""
        << num(py(yv)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
        << tick_label(yv) << "</text>\n";
  }
  out << "</g>\n";
  out << "<text x=\"" << num(left + w / 2) << "\" y=\"" << num(plot.height - 10.0)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(plot.x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << num(top + h / 2) << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << num(top + h / 2) << ")\">" << escape(plot.y_label) << "</text>\n";

  for (const auto& b : plot.bands) {
    if (b.x.empty()) continue;
    out << "<polygon fill=\"" << escape(b.color) << "\" fill-opacity=\"" << b.opacity << "\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < b.x.size(); ++i) out << num(px(b.x[i])) << ',' << num(py(clamp_y(b.upper[i]))) << ' ';
    for (std::size_t i = b.x.size(); i-- > 0;) out << num(px(b.x[i])) << ',' << num(py(clamp_y(b.lower[i]))) << ' ';
    out << "\"/>\n";
  }
  for (double r : plot.reference_lines) {
    out << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(r)) << "\" x2=\"" << num(left + w) << "\" y2=\""
        << num(py(r)) << "\" stroke=\"#888888\" stroke-dasharray=\"2,3\"/>\n";
  }
  for (const auto& s : plot.series) {
    if (s.x.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << escape(s.color) << "\" stroke-width=\"1.5\"";
    if (s.dashed) out << " stroke-dasharray=\"6,4\"";
    out << " points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) out << num(px(s.x[i])) << ',' << num(py(clamp_y(s.y[i]))) << ' ';
    out << "\"/>\n";
  }

  // Legend.
  double ly = top + 8;
  for (const auto& s : plot.series) {
    if (s.label.empty()) continue;
    out << "<line x1=\"" << num(left + w - 120) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + w - 100)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << escape(s.color) << "\" stroke-width=\"2\""
        << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    out << "<text x=\"" << num(left + w - 95) << "\" y=\"" << num(ly + 4) << "\" font-size=\"11\">"
        << escape(s.label) << "</text>\n";
    ly += 16;
  }
  out << "</svg>\n";
  return out.str();
}

void write_svg(const SvgPlot& plot, const std::string& path) {
  const auto text = render_svg(plot);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

}  // namespace fairtrain
