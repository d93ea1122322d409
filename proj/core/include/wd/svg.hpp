#pragma once

#include <string>
#include <vector>

namespace wd::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Renders a self-contained SVG line chart (axes, tick labels, legend) with
// one polyline per series. Output bytes are a pure function of the input.
// Throws std::invalid_argument on an empty curve set or mismatched x/y.
std::string render_line_chart(const std::vector<Series>& curves, const std::string& title,
                              const std::string& x_label, const std::string& y_label);

// render_line_chart written to path.
void emit_plot_svg(const std::vector<Series>& curves, const std::string& title,
                   const std::string& x_label, const std::string& y_label,
                   const std::string& path);

}  // namespace wd::svg
