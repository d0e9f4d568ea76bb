#include "chronolm/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace chronolm {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string rgb(int r, int g, int b) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

// diverging blue-white-red, t in [-1, 1]
std::string diverging_color(double t) {
  t = std::clamp(t, -1.0, 1.0);
  const int r = t >= 0 ? 255 : int(std::lround(255 * (1.0 + t)));
  const int b = t <= 0 ? 255 : int(std::lround(255 * (1.0 - t)));
  const int g = int(std::lround(255 * (1.0 - std::abs(t))));
  return rgb(r, g, b);
}

constexpr const char* kPalette[6] = {"#1f77b4", "#d62728", "#2ca02c",
                                     "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string svg_heatmap(const MatD& values,
                        const std::vector<std::string>& row_labels,
                        const std::vector<std::string>& col_labels,
                        const std::string& title) {
  const Index rows = values.rows(), cols = values.cols();
  if (rows == 0 || cols == 0) throw FormatError("heatmap: empty matrix");
  const int cell = 40, left = 70, top = 50, bottom = 40;
  const int width = left + cell * int(cols) + 20;
  const int height = top + cell * int(rows) + bottom;

  double scale = values.cwiseAbs().maxCoeff();
  if (scale <= 0.0) scale = 1.0;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" font-family=\"monospace\" font-size=\"11\">\n";
  svg += "<text x=\"" + std::to_string(left) +
         "\" y=\"20\" font-size=\"13\">" + title + "</text>\n";
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      const double v = values(r, c);
      svg += "<rect x=\"" + std::to_string(left + cell * int(c)) + "\" y=\"" +
             std::to_string(top + cell * int(r)) + "\" width=\"" +
             std::to_string(cell) + "\" height=\"" + std::to_string(cell) +
             "\" fill=\"" + diverging_color(v / scale) +
             "\" stroke=\"#ffffff\"/>\n";
      svg += "<text x=\"" + std::to_string(left + cell * int(c) + cell / 2) +
             "\" y=\"" + std::to_string(top + cell * int(r) + cell / 2 + 4) +
             "\" text-anchor=\"middle\" font-size=\"9\">" + fmt(v) +
             "</text>\n";
    }
  }
  for (Index r = 0; r < rows; ++r) {
    svg += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" +
           std::to_string(top + cell * int(r) + cell / 2 + 4) +
           "\" text-anchor=\"end\">" +
           (std::size_t(r) < row_labels.size() ? row_labels[std::size_t(r)] : "") +
           "</text>\n";
  }
  for (Index c = 0; c < cols; ++c) {
    svg += "<text x=\"" + std::to_string(left + cell * int(c) + cell / 2) +
           "\" y=\"" + std::to_string(top + cell * int(rows) + 16) +
           "\" text-anchor=\"middle\">" +
           (std::size_t(c) < col_labels.size() ? col_labels[std::size_t(c)] : "") +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string svg_line_chart(const std::vector<double>& x,
                           const std::map<std::string, std::vector<double>>& series,
                           const std::string& title) {
  if (x.empty() || series.empty()) throw FormatError("line chart: empty input");
  const int width = 520, height = 340, left = 60, right = 20, top = 40,
            bottom = 40;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  double xmin = x.front(), xmax = x.front();
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  double ymin = 0.0, ymax = -1e300;
  for (const auto& [name, ys] : series) {
    if (ys.size() != x.size())
      throw FormatError("line chart: series '" + name + "' length mismatch");
    for (double v : ys) ymax = std::max(ymax, v);
  }
  if (ymax <= ymin) ymax = ymin + 1.0;
  if (xmax <= xmin) xmax = xmin + 1.0;

  auto px = [&](double v) { return left + (v - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double v) {
    return top + plot_h - (v - ymin) / (ymax - ymin) * plot_h;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" font-family=\"monospace\" font-size=\"11\">\n";
  svg += "<text x=\"" + std::to_string(left) + "\" y=\"20\" font-size=\"13\">" +
         title + "</text>\n";
  svg += "<rect x=\"" + std::to_string(left) + "\" y=\"" + std::to_string(top) +
         "\" width=\"" + fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
         "\" fill=\"none\" stroke=\"#888888\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = ymin + (ymax - ymin) * i / 4.0;
    svg += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" +
           fmt(py(v) + 4) + "\" text-anchor=\"end\">" + fmt(v) + "</text>\n";
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    svg += "<text x=\"" + fmt(px(x[i])) + "\" y=\"" +
           std::to_string(height - bottom + 16) +
           "\" text-anchor=\"middle\">" + fmt(x[i]) + "</text>\n";
  }
  int color_idx = 0;
  int legend_y = top + 14;
  for (const auto& [name, ys] : series) {
    const char* color = kPalette[color_idx % 6];
    std::string points;
    for (std::size_t i = 0; i < x.size(); ++i) {
      points += fmt(px(x[i])) + "," + fmt(py(ys[i]));
      if (i + 1 < x.size()) points += " ";
    }
    svg += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" +
           color + "\" stroke-width=\"1.5\"/>\n";
    for (std::size_t i = 0; i < x.size(); ++i) {
      svg += "<circle cx=\"" + fmt(px(x[i])) + "\" cy=\"" + fmt(py(ys[i])) +
             "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    }
    svg += "<text x=\"" + std::to_string(left + 8) + "\" y=\"" +
           std::to_string(legend_y) + "\" fill=\"" + color + "\">" + name +
           "</text>\n";
    legend_y += 14;
    ++color_idx;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace chronolm
