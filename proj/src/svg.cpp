#include "csyn/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace csyn {

namespace {

struct Range {
  double lo = 0.0, hi = 1.0;
  void include(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(5);
  os << v;
  return os.str();
}

}  // namespace

std::string render_line_plot(const std::vector<SvgSeries>& series,
                             const SvgPlotOptions& opts) {
  const int w = opts.width, h = opts.height;
  const int ml = 60, mr = 16, mt = 28, mb = 44;
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  for (double v : opts.hlines) {
    ylo = std::min(ylo, v);
    yhi = std::max(yhi, v);
  }
  if (xlo > xhi) { xlo = 0; xhi = 1; }
  if (ylo > yhi) { ylo = 0; yhi = 1; }
  if (xhi == xlo) xhi = xlo + 1;
  if (yhi == ylo) { yhi += 0.5; ylo -= 0.5; }
  const double ypad = 0.05 * (yhi - ylo);
  ylo -= ypad;
  yhi += ypad;

  auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - ylo) / (yhi - ylo) * (h - mt - mb); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  svg << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  if (!opts.title.empty())
    svg << "<text x=\"" << w / 2 << "\" y=\"18\" text-anchor=\"middle\" "
        << "font-size=\"14\" font-family=\"sans-serif\">" << opts.title
        << "</text>\n";
  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  // ticks
  for (int i = 0; i <= 5; ++i) {
    const double xv = xlo + (xhi - xlo) * i / 5.0;
    const double yv = ylo + (yhi - ylo) * i / 5.0;
    svg << "<line x1=\"" << px(xv) << "\" y1=\"" << h - mb << "\" x2=\""
        << px(xv) << "\" y2=\"" << h - mb + 4 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << px(xv) << "\" y=\"" << h - mb + 18
        << "\" text-anchor=\"middle\" font-size=\"11\" "
           "font-family=\"sans-serif\">"
        << fmt(xv) << "</text>\n";
    svg << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(yv) << "\" x2=\"" << ml
        << "\" y2=\"" << py(yv) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
        << fmt(yv) << "</text>\n";
  }
  if (!opts.xlabel.empty())
    svg << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 8
        << "\" text-anchor=\"middle\" font-size=\"12\" "
           "font-family=\"sans-serif\">"
        << opts.xlabel << "</text>\n";
  if (!opts.ylabel.empty())
    svg << "<text x=\"14\" y=\"" << (mt + h - mb) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" "
           "font-family=\"sans-serif\" transform=\"rotate(-90 14 "
        << (mt + h - mb) / 2 << ")\">" << opts.ylabel << "</text>\n";

  for (double v : opts.hlines)
    svg << "<line x1=\"" << ml << "\" y1=\"" << py(v) << "\" x2=\"" << w - mr
        << "\" y2=\"" << py(v)
        << "\" stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n";
  for (double v : opts.vlines)
    svg << "<line x1=\"" << px(v) << "\" y1=\"" << mt << "\" x2=\"" << px(v)
        << "\" y2=\"" << h - mb
        << "\" stroke=\"#888\" stroke-dasharray=\"2 4\"/>\n";

  int li = 0;
  for (const auto& s : series) {
    svg << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      svg << fmt(px(s.x[i])) << "," << fmt(py(s.y[i])) << " ";
    }
    svg << "\"/>\n";
    if (!s.label.empty()) {
      svg << "<text x=\"" << w - mr - 6 << "\" y=\"" << mt + 14 + 16 * li
          << "\" text-anchor=\"end\" font-size=\"11\" "
             "font-family=\"sans-serif\" fill=\""
          << s.color << "\">" << s.label << "</text>\n";
      ++li;
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_structure_map(const Matrix& m, double eps,
                                 const std::vector<BlockFrame>& frames,
                                 const std::string& title) {
  const int n = static_cast<int>(m.rows()), nc = static_cast<int>(m.cols());
  const int cell = std::max(6, 360 / std::max(n, nc));
  const int ml = 20, mt = title.empty() ? 20 : 36;
  const int w = ml + nc * cell + 20, h = mt + n * cell + 20;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\">\n";
  svg << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  if (!title.empty())
    svg << "<text x=\"" << w / 2 << "\" y=\"16\" text-anchor=\"middle\" "
        << "font-size=\"13\" font-family=\"sans-serif\">" << title
        << "</text>\n";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nc; ++j) {
      const bool nz = std::abs(m(i, j)) > eps;
      svg << "<rect x=\"" << ml + j * cell << "\" y=\"" << mt + i * cell
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\""
          << (nz ? "#444" : "#eee") << "\" stroke=\"white\"/>\n";
    }
  for (const auto& f : frames)
    svg << "<rect x=\"" << ml + f.col0 * cell << "\" y=\"" << mt + f.row0 * cell
        << "\" width=\"" << f.cols * cell << "\" height=\"" << f.rows * cell
        << "\" fill=\"none\" stroke=\"" << f.color
        << "\" stroke-width=\"2\" stroke-dasharray=\"5 3\"/>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << content;
}

}  // namespace csyn
