#include "wd/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace wd::svg {

namespace {

constexpr int kWidth = 860;
constexpr int kHeight = 520;
constexpr int kMarginL = 70;
constexpr int kMarginR = 170;  // legend lives in the right margin
constexpr int kMarginT = 46;
constexpr int kMarginB = 56;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
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

std::string render_line_chart(const std::vector<Series>& curves, const std::string& title,
                              const std::string& x_label, const std::string& y_label) {
  if (curves.empty()) throw std::invalid_argument("emit_plot_svg: empty curve set");
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& c : curves) {
    if (c.x.size() != c.y.size()) throw std::invalid_argument("emit_plot_svg: x/y length mismatch");
    if (c.x.empty()) throw std::invalid_argument("emit_plot_svg: empty curve '" + c.name + "'");
    for (double v : c.x) { x_min = std::min(x_min, v); x_max = std::max(x_max, v); }
    for (double v : c.y) { y_min = std::min(y_min, v); y_max = std::max(y_max, v); }
  }
  if (x_max == x_min) { x_max += 1.0; x_min -= 1.0; }
  if (y_max == y_min) { y_max += 1.0; y_min -= 1.0; }

  const double pw = kWidth - kMarginL - kMarginR;
  const double ph = kHeight - kMarginT - kMarginB;
  auto sx = [&](double x) { return kMarginL + (x - x_min) / (x_max - x_min) * pw; };
  auto sy = [&](double y) { return kMarginT + ph - (y - y_min) / (y_max - y_min) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
         "\" height=\"" + std::to_string(kHeight) + "\" viewBox=\"0 0 " + std::to_string(kWidth) +
         " " + std::to_string(kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" + escape(title) + "</text>\n";

  // Axes with 5 ticks per axis.
  out += "<g stroke=\"black\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + fmt(kMarginL) + "\" y1=\"" + fmt(kMarginT + ph) + "\" x2=\"" +
         fmt(kMarginL + pw) + "\" y2=\"" + fmt(kMarginT + ph) + "\"/>\n";
  out += "<line x1=\"" + fmt(kMarginL) + "\" y1=\"" + fmt(kMarginT) + "\" x2=\"" + fmt(kMarginL) +
         "\" y2=\"" + fmt(kMarginT + ph) + "\"/>\n";
  out += "</g>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 4.0;
    const double fy = y_min + (y_max - y_min) * i / 4.0;
    out += "<line x1=\"" + fmt(sx(fx)) + "\" y1=\"" + fmt(kMarginT + ph) + "\" x2=\"" + fmt(sx(fx)) +
           "\" y2=\"" + fmt(kMarginT + ph + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt(sx(fx)) + "\" y=\"" + fmt(kMarginT + ph + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(fx) +
           "</text>\n";
    out += "<line x1=\"" + fmt(kMarginL - 5) + "\" y1=\"" + fmt(sy(fy)) + "\" x2=\"" +
           fmt(kMarginL) + "\" y2=\"" + fmt(sy(fy)) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + fmt(kMarginL - 9) + "\" y=\"" + fmt(sy(fy) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(fy) +
           "</text>\n";
  }
  out += "<text x=\"" + fmt(kMarginL + pw / 2) + "\" y=\"" + fmt(kHeight - 14) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         escape(x_label) + "</text>\n";
  out += "<text x=\"18\" y=\"" + fmt(kMarginT + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " +
         fmt(kMarginT + ph / 2) + ")\">" + escape(y_label) + "</text>\n";

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kPalette[c % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string points;
    for (std::size_t i = 0; i < curves[c].x.size(); ++i) {
      if (i) points += ' ';
      points += fmt(sx(curves[c].x[i])) + "," + fmt(sy(curves[c].y[i]));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.6\" points=\"" + points + "\"/>\n";
    const double ly = kMarginT + 14 + 20.0 * static_cast<double>(c);
    out += "<line x1=\"" + fmt(kWidth - kMarginR + 12) + "\" y1=\"" + fmt(ly) + "\" x2=\"" +
           fmt(kWidth - kMarginR + 38) + "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + fmt(kWidth - kMarginR + 44) + "\" y=\"" + fmt(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(curves[c].name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void emit_plot_svg(const std::vector<Series>& curves, const std::string& title,
                   const std::string& x_label, const std::string& y_label,
                   const std::string& path) {
  const std::string body = render_line_chart(curves, title, x_label, y_label);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit_plot_svg: cannot open for write: " + path);
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw std::runtime_error("emit_plot_svg: write failed: " + path);
}

}  // namespace wd::svg
