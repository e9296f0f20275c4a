#pragma once

#include <string>
#include <vector>

namespace devmine::svg {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Multi-series line chart with axes, ticks, and a legend. `meta` is embedded
// as an XML comment (seed, config digest).
std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series,
                       const std::string& meta = {});

// Horizontal bar chart, one bar per label, values in [0, 1] or any range.
std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                      const std::vector<double>& values, const std::string& meta = {});

}  // namespace devmine::svg
