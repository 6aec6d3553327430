#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "photostyle/stats.hpp"

namespace photostyle {

enum class PlotKind { ScatterWithFit, BoxplotGrid, CoefficientDotplot, BarWithCi };

std::string_view to_string(PlotKind kind);
PlotKind parse_plot_kind(std::string_view text);  // also accepts scatter, boxplot, coef, bar

inline constexpr std::string_view kDemocratBlue = "#1f4e9c";
inline constexpr std::string_view kRepublicanRed = "#c0282d";
inline constexpr std::string_view kNeutralGray = "#555555";

// Party code or name to series color.
std::string_view party_color(std::string_view party);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct ScatterSeries {
  std::string name;
  std::string color;
  std::vector<Point> points;
};

// Groups drawn side by side per series (e.g. label x party).
struct BoxSeries {
  std::string name;
  std::string color;
  std::vector<NamedGroup> groups;
};

struct Estimate {
  std::string label;   // model or arm
  std::string series;  // color key
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct PlotSpec {
  PlotKind kind = PlotKind::ScatterWithFit;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ScatterSeries> scatter;
  std::vector<BoxSeries> boxes;
  std::vector<Estimate> estimates;  // dotplot and bar
};

struct FitLine {
  double slope = 0.0;
  double intercept = 0.0;
};

// Closed-form least-squares line; needs two distinct x values.
std::optional<FitLine> fit_line(const std::vector<Point>& points);

// Deterministic SVG 1.1. Data elements carry class names (point, fit, box,
// median, coef, bar, ci) and the plot area records its data-to-pixel mapping
// as data-* attributes so values can be read back.
std::string render_svg(const PlotSpec& spec);

}  // namespace photostyle
