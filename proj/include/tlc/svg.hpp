#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace tlc {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotCircle {
  double cx = 0.0, cy = 0.0, r = 0.0;
  bool filled = false;
  bool dashed = false;
  std::string note;
};

struct PlotOptions {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool equal_aspect = false;  // xy paths and the complex plane
  bool zero_line = false;     // dashed y = 0 rule, used on h plots
  std::vector<PlotCircle> circles;
};

namespace detail {

inline std::string svg_num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline const char* series_color(size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

}  // namespace detail

// Single-file SVG line plot. Deliberately plain: data fidelity matters here,
// visual styling does not.
inline void write_plot_svg(const std::string& path, const std::vector<PlotSeries>& series,
                           const PlotOptions& opt) {
  const double W = 780, H = 500, L = 72, R = 24, T = 44, B = 56;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  for (const auto& c : opt.circles) {
    xmin = std::min(xmin, c.cx - c.r);
    xmax = std::max(xmax, c.cx + c.r);
    ymin = std::min(ymin, c.cy - c.r);
    ymax = std::max(ymax, c.cy + c.r);
  }
  if (!std::isfinite(xmin)) {
    xmin = ymin = 0.0;
    xmax = ymax = 1.0;
  }
  if (opt.zero_line) {
    ymin = std::min(ymin, 0.0);
    ymax = std::max(ymax, 0.0);
  }
  auto pad = [](double& lo, double& hi) {
    if (hi <= lo) {
      lo -= 1.0;
      hi += 1.0;
    } else {
      const double p = 0.05 * (hi - lo);
      lo -= p;
      hi += p;
    }
  };
  pad(xmin, xmax);
  pad(ymin, ymax);
  if (opt.equal_aspect) {
    const double sx = (xmax - xmin) / (W - L - R);
    const double sy = (ymax - ymin) / (H - T - B);
    const double s = std::max(sx, sy);
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    xmin = cx - 0.5 * s * (W - L - R);
    xmax = cx + 0.5 * s * (W - L - R);
    ymin = cy - 0.5 * s * (H - T - B);
    ymax = cy + 0.5 * s * (H - T - B);
  }

  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">"
     << opt.title << "</text>\n";

  // frame, ticks, grid
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
     << H - T - B << "\" fill=\"none\" stroke=\"#444\"/>\n";
  const int nticks = 6;
  for (int i = 0; i < nticks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / (nticks - 1);
    const double fy = ymin + (ymax - ymin) * i / (nticks - 1);
    const double X = px(fx), Y = py(fy);
    os << "<line x1=\"" << X << "\" y1=\"" << T << "\" x2=\"" << X << "\" y2=\"" << H - B
       << "\" stroke=\"#ddd\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << Y << "\" x2=\"" << W - R << "\" y2=\"" << Y
       << "\" stroke=\"#ddd\"/>\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", fx);
    os << "<text x=\"" << X << "\" y=\"" << H - B + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << buf
       << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.4g", fy);
    os << "<text x=\"" << L - 6 << "\" y=\"" << Y + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << buf
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 14
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << opt.xlabel
     << "</text>\n";
  os << "<text x=\"18\" y=\"" << (T + H - B) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        "transform=\"rotate(-90 18 "
     << (T + H - B) / 2 << ")\">" << opt.ylabel << "</text>\n";

  if (opt.zero_line && ymin < 0.0 && ymax > 0.0) {
    os << "<line x1=\"" << L << "\" y1=\"" << py(0.0) << "\" x2=\"" << W - R << "\" y2=\""
       << py(0.0) << "\" stroke=\"#000\" stroke-dasharray=\"6 4\"/>\n";
  }

  for (const auto& c : opt.circles) {
    os << "<circle cx=\"" << px(c.cx) << "\" cy=\"" << py(c.cy) << "\" r=\""
       << c.r / (xmax - xmin) * (W - L - R) << "\" fill=\""
       << (c.filled ? "#bbbbbb" : "none") << "\" stroke=\"#555\""
       << (c.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    if (!c.note.empty())
      os << "<text x=\"" << px(c.cx) << "\" y=\"" << py(c.cy) + 4
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << c.note
         << "</text>\n";
  }

  // polylines, broken at non-finite samples
  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = detail::series_color(si);
    std::ostringstream pts;
    bool open = false;
    auto flush = [&]() {
      if (open)
        os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.6\"/>\n";
      pts.str("");
      open = false;
    };
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();
        continue;
      }
      pts << detail::svg_num(px(s.x[i])) << "," << detail::svg_num(py(s.y[i])) << " ";
      open = true;
    }
    flush();
    // legend entry
    const double ly = T + 16 + 16 * static_cast<double>(si);
    os << "<line x1=\"" << W - R - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - R - 122
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R - 116 << "\" y=\"" << ly
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("svg: cannot open for writing: " + path);
  out << os.str();
  if (!out) throw std::runtime_error("svg: write failed: " + path);
}

}  // namespace tlc
