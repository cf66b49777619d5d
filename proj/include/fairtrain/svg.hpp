#pragma once

#include <string>
#include <vector>

namespace fairtrain {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

/// Shaded region between two curves sharing the x values.
struct SvgBand {
  std::vector<double> x;
  std::vector<double> lower;
  std::vector<double> upper;
  std::string color = "#1f77b4";
  double opacity = 0.25;
};

struct SvgPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<SvgSeries> series;
  std::vector<SvgBand> bands;
  /// Horizontal reference lines drawn in grey.
  std::vector<double> reference_lines;
  int width = 640;
  int height = 400;
};

/// Standalone SVG document with linear axes. Throws if there is no non-empty series.
std::string render_svg(const SvgPlot& plot);
void write_svg(const SvgPlot& plot, const std::string& path);

}  // namespace fairtrain
