#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace lcsim::cli {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  snprintf(buf, sizeof buf, f, v);
  return buf;
}

double nice_step(double range, int target_ticks) {
  if (!(range > 0.0)) return 1.0;
  const double raw = range / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double step = norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0;
  return step * mag;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_line_plot(const PlotSpec& spec,
                             const std::vector<Series>& series) {
  if (series.empty()) {
    throw std::invalid_argument("plot: need at least one series");
  }
  const double left = 62, right = 14, top = 34, bottom = 48;
  const double w = spec.width, h = spec.height;
  const double px0 = left, px1 = w - right, py0 = top, py1 = h - bottom;

  double x_min = 0, x_max = 0, y_hi = spec.y_min;
  bool first = true;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size() ||
        (!s.yerr.empty() && s.yerr.size() != s.y.size())) {
      throw std::invalid_argument("plot: series size mismatch");
    }
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_min = x_max = s.x[i];
        first = false;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      const double err = s.yerr.empty() ? 0.0 : s.yerr[i];
      y_hi = std::max(y_hi, s.y[i] + err);
    }
  }
  if (x_max <= x_min) x_max = x_min + 1;
  const double y_min = spec.y_min;
  const double y_max = spec.y_max ? *spec.y_max
                                  : (y_hi > y_min ? y_min + 1.05 * (y_hi - y_min)
                                                  : y_min + 1);

  auto X = [&](double x) { return px0 + (x - x_min) / (x_max - x_min) * (px1 - px0); };
  auto Y = [&](double y) { return py1 - (y - y_min) / (y_max - y_min) * (py1 - py0); };

  std::string svg;
  svg += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\"", w);
  svg += fmt(" height=\"%g\"", h);
  svg += fmt(" viewBox=\"0 0 %g", w) + fmt(" %g\">\n", h);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n";

  // frame and ticks
  svg += fmt("<rect x=\"%g\"", px0) + fmt(" y=\"%g\"", py0) +
         fmt(" width=\"%g\"", px1 - px0) + fmt(" height=\"%g\"", py1 - py0) +
         " fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  const double xs = nice_step(x_max - x_min, 5);
  for (double t = std::ceil(x_min / xs) * xs; t <= x_max + 1e-9 * xs; t += xs) {
    svg += fmt("<line x1=\"%g\"", X(t)) + fmt(" x2=\"%g\"", X(t)) +
           fmt(" y1=\"%g\"", py1) + fmt(" y2=\"%g\"", py1 + 4) +
           " stroke=\"black\"/>\n";
    svg += fmt("<text x=\"%g\"", X(t)) + fmt(" y=\"%g\"", py1 + 17) +
           " text-anchor=\"middle\">" + fmt("%g", t) + "</text>\n";
  }
  const double ys = nice_step(y_max - y_min, 5);
  for (double t = std::ceil(y_min / ys) * ys; t <= y_max + 1e-9 * ys; t += ys) {
    svg += fmt("<line x1=\"%g\"", px0 - 4) + fmt(" x2=\"%g\"", px0) +
           fmt(" y1=\"%g\"", Y(t)) + fmt(" y2=\"%g\"", Y(t)) +
           " stroke=\"black\"/>\n";
    svg += fmt("<text x=\"%g\"", px0 - 7) + fmt(" y=\"%g\"", Y(t) + 4) +
           " text-anchor=\"end\">" + fmt("%g", t) + "</text>\n";
  }

  // series
  for (const Series& s : series) {
    std::string points;
    for (size_t i = 0; i < s.x.size(); ++i) {
      points += fmt("%.2f", X(s.x[i])) + fmt(",%.2f ", Y(s.y[i]));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.6\"";
    if (s.dashed) svg += " stroke-dasharray=\"6 4\"";
    svg += " points=\"" + points + "\"/>\n";

    if (!s.yerr.empty()) {
      const int stride = std::max(1, spec.err_stride);
      for (size_t i = 0; i < s.x.size(); i += static_cast<size_t>(stride)) {
        const double cx = X(s.x[i]);
        const double lo = Y(s.y[i] - s.yerr[i]);
        const double hi = Y(s.y[i] + s.yerr[i]);
        svg += fmt("<line x1=\"%g\"", cx) + fmt(" x2=\"%g\"", cx) +
               fmt(" y1=\"%g\"", lo) + fmt(" y2=\"%g\"", hi) + " stroke=\"" +
               s.color + "\" stroke-width=\"1\"/>\n";
        svg += fmt("<line x1=\"%g\"", cx - 2.5) + fmt(" x2=\"%g\"", cx + 2.5) +
               fmt(" y1=\"%g\"", lo) + fmt(" y2=\"%g\"", lo) + " stroke=\"" +
               s.color + "\" stroke-width=\"1\"/>\n";
        svg += fmt("<line x1=\"%g\"", cx - 2.5) + fmt(" x2=\"%g\"", cx + 2.5) +
               fmt(" y1=\"%g\"", hi) + fmt(" y2=\"%g\"", hi) + " stroke=\"" +
               s.color + "\" stroke-width=\"1\"/>\n";
      }
    }
  }

  // legend, top right inside the frame
  double ly = py0 + 14;
  for (const Series& s : series) {
    const double lx = px1 - 150;
    svg += fmt("<line x1=\"%g\"", lx) + fmt(" x2=\"%g\"", lx + 22) +
           fmt(" y1=\"%g\"", ly - 4) + fmt(" y2=\"%g\"", ly - 4) +
           " stroke=\"" + s.color + "\" stroke-width=\"1.6\"";
    if (s.dashed) svg += " stroke-dasharray=\"6 4\"";
    svg += "/>\n";
    svg += fmt("<text x=\"%g\"", lx + 27) + fmt(" y=\"%g\"", ly) + ">" +
           escape(s.label) + "</text>\n";
    ly += 16;
  }

  // labels
  svg += fmt("<text x=\"%g\"", (px0 + px1) / 2) + fmt(" y=\"%g\"", 20.0) +
         " text-anchor=\"middle\" font-size=\"14\">" + escape(spec.title) +
         "</text>\n";
  svg += fmt("<text x=\"%g\"", (px0 + px1) / 2) + fmt(" y=\"%g\"", h - 10) +
         " text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
  svg += "<text text-anchor=\"middle\" transform=\"translate(16," +
         fmt("%g", (py0 + py1) / 2) + ") rotate(-90)\">" +
         escape(spec.y_label) + "</text>\n";

  svg += "</g>\n</svg>\n";
  return svg;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  out << contents;
  if (!out) {
    throw std::runtime_error("write failed for '" + path + "'");
  }
}

}  // namespace lcsim::cli
