#pragma once

// Minimal SVG charts for experiment reports.

#include <string>
#include <vector>

namespace twinforge {

struct BarSeries {
  std::string name;
  std::vector<double> values;
  std::vector<double> low, high;  // optional error bars, same length as values
};

std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                          const std::vector<std::string>& categories, const std::vector<BarSeries>& series);

struct LineSeries {
  std::string name;
  std::vector<double> x, y;
};

std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<LineSeries>& series, double y_min, double y_max);

}  // namespace twinforge
