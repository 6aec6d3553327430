#pragma once

#include <optional>
#include <string>
#include <vector>

namespace photostyle {

struct NamedColumn {
  std::string name;
  std::vector<double> values;
};

struct GroupIntercept {
  std::string group;
  double intercept = 0.0;
};

struct RegressionResult {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  double r_squared = 0.0;
  std::size_t n_obs = 0;
  std::vector<GroupIntercept> fixed_effects;  // empty for plain OLS
  std::vector<double> residuals;
};

// Least squares via column-pivoting QR. The intercept, when requested, is
// the first coefficient and is named "(intercept)". R^2 is centered with an
// intercept and uncentered without one.
RegressionResult ols(const std::vector<double>& y, const std::vector<NamedColumn>& x, bool intercept = true);

// Within-group demeaned regression; group intercepts are recovered as
// mean(y_g) - b . mean(x_g). R^2 is the within R^2.
RegressionResult ols_fixed_effects(const std::vector<double>& y, const std::vector<NamedColumn>& x,
                                   const std::vector<std::string>& groups);

struct WilcoxonResult {
  double statistic = 0.0;  // rank sum of the first sample, midranks for ties
  double p_value = 1.0;
  bool exact = false;
};

inline constexpr std::size_t kWilcoxonExactLimit = 12;

// Exact enumeration when n_a + n_b <= 12, normal approximation otherwise.
WilcoxonResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b);
double wilcoxon_exact_p(const std::vector<double>& a, const std::vector<double>& b);
// Tie-corrected variance and 0.5 continuity correction.
double wilcoxon_normal_p(const std::vector<double>& a, const std::vector<double>& b);

struct Interval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

double normal_quantile(double p);
double t_quantile(double p, double dof);

// p +- z sqrt(p (1 - p) / n), clipped to [0, 1].
Interval proportion_ci(std::size_t k, std::size_t n, double level = 0.95);
Interval proportion_ci_rate(double p_hat, std::size_t n, double level = 0.95);

// mean +- t_{n-1} s / sqrt(n).
Interval mean_ci(const std::vector<double>& values, double level = 0.95);

double quantile_type7(std::vector<double> values, double p);

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;   // most extreme values inside 1.5 IQR
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

BoxStats boxplot_stats(const std::vector<double>& values);

struct NamedGroup {
  std::string name;
  std::vector<double> values;
};

std::vector<std::pair<std::string, BoxStats>> boxplot_stats(const std::vector<NamedGroup>& groups);

}  // namespace photostyle
