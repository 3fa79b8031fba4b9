#pragma once

// Minimal static SVG line charts: a grid of panels, each with any number of
// polylines, optional log y axis, horizontal reference lines and a vertical
// marker. Non-finite points (and non-positive ones on log axes) break the line.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace neos::harness {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
  bool markers = false;  // dots instead of a polyline
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_y = false;
  std::vector<Series> series;
  std::optional<double> vline;  // e.g. a switch step
};

std::string render_svg(const std::vector<Panel>& panels, int columns, int panel_width = 440, int panel_height = 300);
void write_svg(const std::filesystem::path& file, const std::vector<Panel>& panels, int columns);

/// y_t = alpha x_t + (1 - alpha) y_{t-1}; non-finite inputs pass through.
std::vector<double> exp_smooth(const std::vector<double>& v, double alpha);

/// A constant reference line spanning [x0, x1].
Series hline(const std::string& label, double y, double x0, double x1, const std::string& color = "#d62728");

}  // namespace neos::harness
