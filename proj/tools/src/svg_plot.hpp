#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lcsim::cli {

struct Series {
  std::string label;
  std::string color;  // CSS color
  bool dashed = false;
  std::vector<double> x, y;
  std::vector<double> yerr;  // optional; error bars drawn every err_stride points
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 560;
  int height = 420;
  int err_stride = 10;
  double y_min = 0.0;
  std::optional<double> y_max;  // auto from data when unset
};

std::string render_line_plot(const PlotSpec& spec,
                             const std::vector<Series>& series);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace lcsim::cli
