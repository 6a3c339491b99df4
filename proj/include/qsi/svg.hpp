#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace qsi::svg {

/// One plotted series: a polyline (line = true) or markers with optional
/// error bars.
struct Series {
  std::string label;
  std::string color = "#1f77b4";
  bool line = false;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> yerr;  // empty or same length as y
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  int width = 720;
  int height = 480;
};

/// Render line/marker/error-bar primitives directly; no plotting library.
std::string render(const Plot& plot);
void write(const std::filesystem::path& path, const Plot& plot);

}  // namespace qsi::svg
