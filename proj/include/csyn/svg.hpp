#pragma once

#include <string>
#include <vector>

#include "csyn/types.hpp"

namespace csyn {

/// Minimal SVG plotting: polylines with axes and optional markers. No
/// external dependency; enough for sweep curves, traces and structure maps.
struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string label;
  std::string color = "#1f77b4";
};

struct SvgPlotOptions {
  int width = 640;
  int height = 420;
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<double> hlines;  // horizontal marker lines (e.g. stability edge)
  std::vector<double> vlines;
};

std::string render_line_plot(const std::vector<SvgSeries>& series,
                             const SvgPlotOptions& opts);

/// Zero/nonzero structure heat map of a matrix with block frames.
struct BlockFrame {
  int row0 = 0, col0 = 0, rows = 0, cols = 0;
  std::string color = "#d62728";
};

std::string render_structure_map(const Matrix& m, double eps,
                                 const std::vector<BlockFrame>& frames,
                                 const std::string& title);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace csyn
