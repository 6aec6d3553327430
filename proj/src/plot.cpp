#include "photostyle/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "photostyle/csv.hpp"
#include "photostyle/error.hpp"

namespace photostyle {

std::string_view to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::ScatterWithFit: return "scatter_with_fit";
    case PlotKind::BoxplotGrid: return "boxplot_grid";
    case PlotKind::CoefficientDotplot: return "coefficient_dotplot";
    case PlotKind::BarWithCi: return "bar_with_ci";
  }
  return "";
}

PlotKind parse_plot_kind(std::string_view t) {
  if (t == "scatter" || t == "scatter_with_fit") return PlotKind::ScatterWithFit;
  if (t == "boxplot" || t == "boxplot_grid") return PlotKind::BoxplotGrid;
  if (t == "coef" || t == "coefficient_dotplot") return PlotKind::CoefficientDotplot;
  if (t == "bar" || t == "bar_with_ci") return PlotKind::BarWithCi;
  throw ParseError("unknown plot kind '" + std::string(t) + "'");
}

std::string_view party_color(std::string_view party) {
  if (party == "D" || party == "Democrat") return kDemocratBlue;
  if (party == "R" || party == "Republican") return kRepublicanRed;
  return kNeutralGray;
}

std::optional<FitLine> fit_line(const std::vector<Point>& points) {
  if (points.size() < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxy = 0, sxx = 0;
  for (const auto& p : points) {
    sxy += (p.x - mx) * (p.y - my);
    sxx += (p.x - mx) * (p.x - mx);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  const double slope = sxy / sxx;
  return FitLine{slope, my - slope * mx};
}

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 620, kTop = 40, kBottom = 350;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0, hi = 1;

  void pad() {
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
      return;
    }
    const double m = (hi - lo) * 0.05;
    lo -= m;
    hi += m;
  }
};

Range range_of(const std::vector<double>& v) {
  Range r{*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
  r.pad();
  return r;
}

class Canvas {
 public:
  Canvas(const PlotSpec& spec, Range y) : y_(y) {
    out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(kWidth) + "\" height=\"" +
            num(kHeight) + "\" viewBox=\"0 0 640 420\" data-kind=\"" + std::string(to_string(spec.kind)) + "\">\n";
    out_ += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"420\" fill=\"#ffffff\"/>\n";
    text(kWidth / 2, 24, spec.title, "middle", "title", 15);
    text(kWidth / 2, kHeight - 14, spec.x_label, "middle", "x-label", 12);
    out_ += "<text class=\"y-label\" x=\"18\" y=\"" + num((kTop + kBottom) / 2) +
            "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 " +
            num((kTop + kBottom) / 2) + ")\">" + escape(spec.y_label) + "</text>\n";
  }

  double py(double v) const { return kBottom - (v - y_.lo) / (y_.hi - y_.lo) * (kBottom - kTop); }

  void plot_area(const std::string& extra) {
    out_ += "<rect class=\"plot-area\" x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" +
            num(kRight - kLeft) + "\" height=\"" + num(kBottom - kTop) + "\" fill=\"none\" stroke=\"#333333\"" +
            " data-y-min=\"" + format_real(y_.lo) + "\" data-y-max=\"" + format_real(y_.hi) + "\"" + extra + "/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double v = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      line(kLeft - 4, py(v), kLeft, py(v), "#333333", "tick");
      text(kLeft - 6, py(v) + 4, tick_label(v), "end", "tick-label", 10);
    }
  }

  void line(double x1, double y1, double x2, double y2, std::string_view color, std::string_view cls,
            const std::string& extra = "", double width = 1) {
    out_ += "<line class=\"" + std::string(cls) + "\" x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
            "\" y2=\"" + num(y2) + "\" stroke=\"" + std::string(color) + "\" stroke-width=\"" + num(width) + "\"" +
            extra + "/>\n";
  }

  void circle(double cx, double cy, double r, std::string_view color, std::string_view cls,
              const std::string& extra = "") {
    out_ += "<circle class=\"" + std::string(cls) + "\" cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
            "\" fill=\"" + std::string(color) + "\"" + extra + "/>\n";
  }

  void rect(double x, double y, double w, double h, std::string_view fill, std::string_view stroke,
            std::string_view cls, const std::string& extra = "") {
    out_ += "<rect class=\"" + std::string(cls) + "\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
            "\" height=\"" + num(h) + "\" fill=\"" + std::string(fill) + "\" stroke=\"" + std::string(stroke) + "\"" +
            extra + "/>\n";
  }

  void text(double x, double y, std::string_view s, std::string_view anchor, std::string_view cls, int size) {
    out_ += "<text class=\"" + std::string(cls) + "\" x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" +
            std::string(anchor) + "\" font-family=\"sans-serif\" font-size=\"" + std::to_string(size) + "\">" +
            escape(s) + "</text>\n";
  }

  void raw(const std::string& s) { out_ += s; }

  void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    double y = kTop + 12;
    for (const auto& [name, color] : entries) {
      rect(kRight - 110, y - 8, 10, 10, color, color, "legend-key");
      text(kRight - 95, y + 1, name, "start", "legend", 11);
      y += 16;
    }
  }

  std::string finish() {
    out_ += "</svg>\n";
    return std::move(out_);
  }

 private:
  Range y_;
  std::string out_;
};

std::string attr(std::string_view name, std::string_view value) {
  return " " + std::string(name) + "=\"" + escape(value) + "\"";
}

std::string render_scatter(const PlotSpec& spec) {
  std::vector<double> xs, ys;
  for (const auto& s : spec.scatter) {
    if (s.points.empty()) throw PlotError("scatter series '" + s.name + "' is empty");
    for (const auto& p : s.points) {
      xs.push_back(p.x);
      ys.push_back(p.y);
    }
  }
  Range xr = range_of(xs);
  Canvas c(spec, range_of(ys));
  auto px = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * (kRight - kLeft); };
  c.plot_area(attr("data-x-min", format_real(xr.lo)) + attr("data-x-max", format_real(xr.hi)));
  for (int i = 0; i <= 4; ++i) {
    const double v = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    c.line(px(v), kBottom, px(v), kBottom + 4, "#333333", "tick");
    c.text(px(v), kBottom + 16, tick_label(v), "middle", "tick-label", 10);
  }
  std::vector<std::pair<std::string, std::string>> legend;
  for (const auto& s : spec.scatter) {
    c.raw("<g class=\"series\"" + attr("data-series", s.name) + ">\n");
    for (const auto& p : s.points) {
      c.circle(px(p.x), c.py(p.y), 3.5, s.color, "point",
               attr("data-x", format_real(p.x)) + attr("data-y", format_real(p.y)));
    }
    if (const auto f = fit_line(s.points)) {
      double lo = s.points.front().x, hi = lo;
      for (const auto& p : s.points) {
        lo = std::min(lo, p.x);
        hi = std::max(hi, p.x);
      }
      c.line(px(lo), c.py(f->intercept + f->slope * lo), px(hi), c.py(f->intercept + f->slope * hi), s.color, "fit",
             attr("data-series", s.name) + attr("data-slope", format_real(f->slope)) +
                 attr("data-intercept", format_real(f->intercept)),
             2);
    }
    c.raw("</g>\n");
    legend.emplace_back(s.name, s.color);
  }
  c.legend(legend);
  return c.finish();
}

std::string render_boxes(const PlotSpec& spec) {
  std::vector<std::string> categories;
  std::vector<double> all;
  std::vector<std::vector<std::pair<std::string, BoxStats>>> stats;
  for (const auto& s : spec.boxes) {
    if (s.groups.empty()) throw PlotError("box series '" + s.name + "' is empty");
    for (const auto& g : s.groups) {
      if (g.values.empty()) throw PlotError("box group '" + g.name + "' of series '" + s.name + "' is empty");
      if (std::find(categories.begin(), categories.end(), g.name) == categories.end()) categories.push_back(g.name);
      all.insert(all.end(), g.values.begin(), g.values.end());
    }
    stats.push_back(boxplot_stats(s.groups));
  }
  Canvas c(spec, range_of(all));
  c.plot_area("");
  const double slot = (kRight - kLeft) / static_cast<double>(categories.size());
  const double width = slot * 0.8 / static_cast<double>(spec.boxes.size());
  for (std::size_t k = 0; k < categories.size(); ++k) {
    c.text(kLeft + slot * (static_cast<double>(k) + 0.5), kBottom + 16, categories[k], "middle", "category", 11);
  }
  std::vector<std::pair<std::string, std::string>> legend;
  for (std::size_t si = 0; si < spec.boxes.size(); ++si) {
    const auto& s = spec.boxes[si];
    for (const auto& [group, b] : stats[si]) {
      const auto k = static_cast<double>(std::find(categories.begin(), categories.end(), group) - categories.begin());
      const double x = kLeft + slot * k + slot * 0.1 + width * static_cast<double>(si);
      const double mid = x + width / 2;
      c.raw("<g class=\"box\"" + attr("data-group", group) + attr("data-series", s.name) + ">\n");
      c.line(mid, c.py(b.whisker_high), mid, c.py(b.q3), s.color, "whisker");
      c.line(mid, c.py(b.q1), mid, c.py(b.whisker_low), s.color, "whisker");
      c.rect(x + width * 0.1, c.py(b.q3), width * 0.8, c.py(b.q1) - c.py(b.q3), "#ffffff", s.color, "iqr");
      c.line(x + width * 0.1, c.py(b.median), x + width * 0.9, c.py(b.median), s.color, "median", "", 2);
      for (double o : b.outliers) c.circle(mid, c.py(o), 2.5, s.color, "outlier");
      c.raw("</g>\n");
    }
    legend.emplace_back(s.name, s.color);
  }
  c.legend(legend);
  return c.finish();
}

std::string render_estimates(const PlotSpec& spec) {
  if (spec.estimates.empty()) throw PlotError("no estimates to plot");
  const bool bars = spec.kind == PlotKind::BarWithCi;
  std::vector<double> ys = {0.0};
  std::vector<std::string> categories;
  std::vector<std::string> series;
  for (const auto& e : spec.estimates) {
    ys.insert(ys.end(), {e.value, e.lo, e.hi});
    if (std::find(categories.begin(), categories.end(), e.label) == categories.end()) categories.push_back(e.label);
    if (std::find(series.begin(), series.end(), e.series) == series.end()) series.push_back(e.series);
  }
  Canvas c(spec, range_of(ys));
  c.plot_area("");
  c.line(kLeft, c.py(0), kRight, c.py(0), "#999999", "zero");
  const double slot = (kRight - kLeft) / static_cast<double>(categories.size());
  const double width = slot * 0.8 / static_cast<double>(series.size());
  for (std::size_t k = 0; k < categories.size(); ++k) {
    c.text(kLeft + slot * (static_cast<double>(k) + 0.5), kBottom + 16, categories[k], "middle", "category", 9);
  }
  for (const auto& e : spec.estimates) {
    const auto k = static_cast<double>(std::find(categories.begin(), categories.end(), e.label) - categories.begin());
    const auto si = static_cast<double>(std::find(series.begin(), series.end(), e.series) - series.begin());
    const double x = kLeft + slot * k + slot * 0.1 + width * si;
    const double mid = x + width / 2;
    const std::string color(party_color(e.series));
    const std::string data = attr("data-label", e.label) + attr("data-series", e.series) +
                             attr("data-value", format_real(e.value));
    if (bars) {
      const double top = std::min(c.py(0), c.py(e.value));
      c.rect(x + width * 0.1, top, width * 0.8, std::abs(c.py(0) - c.py(e.value)), color, color, "bar", data);
    } else {
      c.circle(mid, c.py(e.value), 4, color, "coef", data);
    }
    c.line(mid, c.py(e.hi), mid, c.py(e.lo), bars ? "#222222" : color, "ci");
    c.line(mid - 4, c.py(e.hi), mid + 4, c.py(e.hi), bars ? "#222222" : color, "ci-cap");
    c.line(mid - 4, c.py(e.lo), mid + 4, c.py(e.lo), bars ? "#222222" : color, "ci-cap");
  }
  if (series.size() > 1 || !series.front().empty()) {
    std::vector<std::pair<std::string, std::string>> legend;
    for (const auto& s : series) legend.emplace_back(s, std::string(party_color(s)));
    c.legend(legend);
  }
  return c.finish();
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  switch (spec.kind) {
    case PlotKind::ScatterWithFit:
      if (spec.scatter.empty()) throw PlotError("scatter plot has no series");
      return render_scatter(spec);
    case PlotKind::BoxplotGrid:
      if (spec.boxes.empty()) throw PlotError("box plot has no series");
      return render_boxes(spec);
    case PlotKind::CoefficientDotplot:
    case PlotKind::BarWithCi:
      return render_estimates(spec);
  }
  throw PlotError("unknown plot kind");
}

}  // namespace photostyle
