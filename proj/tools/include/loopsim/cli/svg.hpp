#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace loopsim::cli {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

struct Panel {
  std::string title;
  std::vector<Series> series;
};

struct ChartOptions {
  std::string title;
  std::string x_label = "round r";
  std::string y_label;
  double panel_width = 420.0;
  double panel_height = 300.0;
  std::size_t columns = 2;
};

/// Line charts laid out as a grid of panels, one legend per panel. Series i
/// in a panel gets stroke style i (colour and dash pattern both change).
/// Every series needs at least one point.
std::string emit_svg(const std::vector<Panel>& panels, const ChartOptions& options);

/// XML character escaping for text content and attribute values.
std::string xml_escape(const std::string& text);

}  // namespace loopsim::cli
