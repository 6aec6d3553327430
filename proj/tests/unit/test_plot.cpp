#include <gtest/gtest.h>

#include <regex>

#include "photostyle/error.hpp"
#include "photostyle/plot.hpp"

using namespace photostyle;

namespace {

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

double attribute(const std::string& element, const std::string& name) {
  std::smatch m;
  const std::regex re(" " + name + "=\"([^\"]+)\"");
  if (!std::regex_search(element, m, re)) throw std::runtime_error("missing attribute " + name);
  return std::stod(m[1]);
}

std::vector<std::string> elements(const std::string& svg, const std::string& cls) {
  std::vector<std::string> out;
  const std::regex re("<[a-z]+ class=\"" + cls + "\"[^>]*>");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

// Every opened element is closed in order.
bool balanced(const std::string& svg) {
  std::vector<std::string> stack;
  const std::regex tag("<(/?)([a-zA-Z]+)[^>]*?(/?)>");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[3] == "/") continue;
    if (m[1] == "/") {
      if (stack.empty() || stack.back() != m[2]) return false;
      stack.pop_back();
    } else {
      stack.push_back(m[2]);
    }
  }
  return stack.empty();
}

}  // namespace

TEST(Svg, TwoPointScatter) {
  PlotSpec spec;
  spec.kind = PlotKind::ScatterWithFit;
  spec.title = "A & B";
  spec.scatter = {{"D", std::string(kDemocratBlue), {{0.1, 0.2}, {0.5, 0.6}}}};
  const auto svg = render_svg(spec);
  EXPECT_EQ(elements(svg, "point").size(), 2u);
  const auto fits = elements(svg, "fit");
  ASSERT_EQ(fits.size(), 1u);
  EXPECT_NEAR(attribute(fits[0], "data-slope"), 1.0, 1e-12);
  EXPECT_NEAR(attribute(fits[0], "data-intercept"), 0.1, 1e-12);
  EXPECT_EQ(svg, render_svg(spec));
  EXPECT_TRUE(balanced(svg));
  EXPECT_NE(svg.find("A &amp; B"), std::string::npos);
  EXPECT_NE(svg.find(kDemocratBlue), std::string::npos);
}

TEST(Svg, EmptySeriesRejected) {
  PlotSpec spec;
  spec.scatter = {{"D", "#000000", {}}};
  EXPECT_THROW(render_svg(spec), PlotError);
  spec.kind = PlotKind::BarWithCi;
  EXPECT_THROW(render_svg(spec), PlotError);
}

TEST(Svg, BoxplotGridParsesBack) {
  PlotSpec spec;
  spec.kind = PlotKind::BoxplotGrid;
  const std::vector<std::string> labels = {"black", "hispanic", "asian"};
  for (const std::string party : {"D", "R"}) {
    BoxSeries s{party, std::string(party_color(party)), {}};
    for (std::size_t k = 0; k < labels.size(); ++k) {
      std::vector<double> v;
      for (int i = 0; i < 9; ++i) v.push_back(0.01 * (i + 1) * static_cast<double>(k + 1) + (party == "D" ? 0.1 : 0));
      s.groups.push_back({labels[k], v});
    }
    spec.boxes.push_back(s);
  }
  const auto svg = render_svg(spec);
  EXPECT_TRUE(balanced(svg));
  EXPECT_EQ(count(svg, "<g class=\"box\""), 6u);

  const auto area = elements(svg, "plot-area").at(0);
  const double y_min = attribute(area, "data-y-min"), y_max = attribute(area, "data-y-max");
  const double top = attribute(area, "y"), height = attribute(area, "height");
  auto value = [&](double py) { return y_min + (top + height - py) / height * (y_max - y_min); };
  const double tol = (y_max - y_min) / height * 1e-3;

  const auto iqr = elements(svg, "iqr");
  const auto med = elements(svg, "median");
  ASSERT_EQ(iqr.size(), 6u);
  std::size_t i = 0;
  for (const auto& s : spec.boxes) {
    for (const auto& g : s.groups) {
      const auto b = boxplot_stats(g.values);
      EXPECT_NEAR(value(attribute(iqr[i], "y")), b.q3, tol);
      EXPECT_NEAR(value(attribute(iqr[i], "y") + attribute(iqr[i], "height")), b.q1, tol);
      EXPECT_NEAR(value(attribute(med[i], "y1")), b.median, tol);
      ++i;
    }
  }
}

TEST(Svg, DotplotAndBars) {
  PlotSpec spec;
  spec.kind = PlotKind::CoefficientDotplot;
  spec.estimates = {{"black", "D", 0.5, 0.2, 0.8}, {"black", "R", -0.1, -0.4, 0.2}};
  const auto dots = render_svg(spec);
  EXPECT_EQ(elements(dots, "coef").size(), 2u);
  EXPECT_EQ(elements(dots, "ci").size(), 2u);
  spec.kind = PlotKind::BarWithCi;
  const auto bars = render_svg(spec);
  EXPECT_EQ(elements(bars, "bar").size(), 2u);
  EXPECT_TRUE(balanced(bars));
}
