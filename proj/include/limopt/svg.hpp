#pragma once

#include <string>
#include <utility>
#include <vector>

namespace limopt {

struct CurveSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (iter, value)
};

// Renders the series as a standalone SVG 1.1 line chart (960x600) with axes,
// tick labels, and a legend. log_y switches the y axis to log scale with
// decade ticks; every value must then be positive. Output bytes are a pure
// function of the input.
void write_svg_curves(const std::vector<CurveSeries>& series, const std::string& path,
                      bool log_y);

}  // namespace limopt
