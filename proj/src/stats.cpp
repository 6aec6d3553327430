#include "photostyle/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>
#include <numeric>

#include "photostyle/error.hpp"

namespace photostyle {

namespace {

struct Fit {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd xtx_inv;
};

// Throws `Err` naming the columns that the pivoted QR finds dependent.
template <typename Err>
Fit solve_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  const auto p = static_cast<Eigen::Index>(names.size());
  if (qr.rank() < p) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < p; ++i) {
      if (!cols.empty()) cols += ", ";
      cols += names[static_cast<std::size_t>(perm[i])];
    }
    throw Err("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " + std::to_string(p) +
              "); dependent columns: " + cols);
  }
  Fit f;
  f.beta = qr.solve(y);
  f.residuals = y - X * f.beta;
  f.xtx_inv = (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  return f;
}

void check_columns(const std::vector<double>& y, const std::vector<NamedColumn>& x) {
  for (double v : y) {
    if (!std::isfinite(v)) throw ValidationError("response contains a non-finite value");
  }
  for (const auto& c : x) {
    if (c.values.size() != y.size()) {
      throw ShapeError("column '" + c.name + "' has " + std::to_string(c.values.size()) + " rows, response has " +
                       std::to_string(y.size()));
    }
    for (double v : c.values) {
      if (!std::isfinite(v)) throw ValidationError("column '" + c.name + "' contains a non-finite value");
    }
  }
}

RegressionResult package(const Fit& f, const Eigen::VectorXd& y, std::vector<std::string> names, bool centered,
                         std::size_t dof) {
  RegressionResult r;
  r.names = std::move(names);
  r.n_obs = static_cast<std::size_t>(y.size());
  const double ssr = f.residuals.squaredNorm();
  const double sigma2 = ssr / static_cast<double>(dof);
  for (Eigen::Index i = 0; i < f.beta.size(); ++i) {
    r.coefficients.push_back(f.beta[i]);
    r.std_errors.push_back(std::sqrt(std::max(0.0, sigma2 * f.xtx_inv(i, i))));
  }
  const double sst = centered ? (y.array() - y.mean()).square().sum() : y.squaredNorm();
  r.r_squared = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 0.0;
  r.residuals.assign(f.residuals.data(), f.residuals.data() + f.residuals.size());
  return r;
}

}  // namespace

RegressionResult ols(const std::vector<double>& y, const std::vector<NamedColumn>& x, bool intercept) {
  check_columns(y, x);
  const auto n = static_cast<Eigen::Index>(y.size());
  const auto p = static_cast<Eigen::Index>(x.size() + (intercept ? 1 : 0));
  if (p == 0) throw ValidationError("regression needs at least one column");
  if (n <= p) {
    throw InsufficientDataError("ols needs more observations (" + std::to_string(n) + ") than parameters (" +
                                std::to_string(p) + ")");
  }
  Eigen::MatrixXd X(n, p);
  std::vector<std::string> names;
  Eigen::Index col = 0;
  if (intercept) {
    X.col(col++).setOnes();
    names.push_back("(intercept)");
  }
  for (const auto& c : x) {
    X.col(col++) = Eigen::Map<const Eigen::VectorXd>(c.values.data(), n);
    names.push_back(c.name);
  }
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  const auto fit = solve_least_squares<CollinearityError>(X, yv, names);
  return package(fit, yv, std::move(names), intercept, static_cast<std::size_t>(n - p));
}

RegressionResult ols_fixed_effects(const std::vector<double>& y, const std::vector<NamedColumn>& x,
                                   const std::vector<std::string>& groups) {
  check_columns(y, x);
  if (groups.size() != y.size()) throw ShapeError("group vector length differs from response length");
  if (x.empty()) throw ValidationError("fixed-effects regression needs a slope column");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
  const std::size_t n = y.size();
  const std::size_t p = x.size();
  const std::size_t g = members.size();
  if (n <= p + g) {
    throw InsufficientDataError("fixed-effects regression needs more observations (" + std::to_string(n) +
                                ") than slopes plus groups (" + std::to_string(p + g) + ")");
  }

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd yv(n);
  std::vector<std::pair<std::string, std::vector<double>>> means;  // group -> [ybar, xbar...]
  for (const auto& [name, idx] : members) {
    std::vector<double> m(p + 1, 0.0);
    for (auto i : idx) {
      m[0] += y[i];
      for (std::size_t j = 0; j < p; ++j) m[j + 1] += x[j].values[i];
    }
    for (auto& v : m) v /= static_cast<double>(idx.size());
    for (auto i : idx) {
      yv[static_cast<Eigen::Index>(i)] = y[i] - m[0];
      for (std::size_t j = 0; j < p; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[j].values[i] - m[j + 1];
    }
    means.emplace_back(name, std::move(m));
  }
  std::vector<std::string> names;
  for (const auto& c : x) names.push_back(c.name);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (X.col(j).cwiseAbs().maxCoeff() < 1e-12) {
      throw IdentificationError("column '" + names[static_cast<std::size_t>(j)] +
                                "' has no within-group variation; slope not identified");
    }
  }
  const auto fit = solve_least_squares<IdentificationError>(X, yv, names);
  auto r = package(fit, yv, std::move(names), false, n - p - g);
  for (const auto& [name, m] : means) {
    double a = m[0];
    for (std::size_t j = 0; j < p; ++j) a -= r.coefficients[j] * m[j + 1];
    r.fixed_effects.push_back({name, a});
  }
  return r;
}

namespace {

struct Ranked {
  std::vector<long> doubled;  // 2 * midrank, integral
  double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

Ranked doubled_midranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  Ranked r;
  r.doubled.resize(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    // ranks i+1 .. j+1 share (i + j + 2) / 2
    for (std::size_t k = i; k <= j; ++k) r.doubled[order[k]] = static_cast<long>(i + j + 2);
    const double t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    i = j + 1;
  }
  return r;
}

void check_samples(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw InsufficientDataError("wilcoxon rank-sum needs two non-empty samples");
  for (double v : a) {
    if (std::isnan(v)) throw ValidationError("wilcoxon sample contains NaN");
  }
  for (double v : b) {
    if (std::isnan(v)) throw ValidationError("wilcoxon sample contains NaN");
  }
}

std::vector<double> pooled(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  return all;
}

}  // namespace

double wilcoxon_exact_p(const std::vector<double>& a, const std::vector<double>& b) {
  check_samples(a, b);
  const auto ranks = doubled_midranks(pooled(a, b));
  const std::size_t na = a.size();
  const long total = std::accumulate(ranks.doubled.begin(), ranks.doubled.end(), 0L);
  long observed = 0;
  for (std::size_t i = 0; i < na; ++i) observed += ranks.doubled[i];

  // ways[k][s]: subsets of size k with doubled rank sum s.
  std::vector<std::vector<double>> ways(na + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
  ways[0][0] = 1.0;
  for (long r : ranks.doubled) {
    for (std::size_t k = na; k >= 1; --k) {
      for (long s = total; s >= r; --s) ways[k][s] += ways[k - 1][s - r];
    }
  }
  // Sums stay in doubled-rank units.
  const double n_all = static_cast<double>(ranks.doubled.size());
  const double expected2 = static_cast<double>(na) * static_cast<double>(total) / n_all;
  const double dev = std::abs(static_cast<double>(observed) - expected2);
  double extreme = 0.0, all = 0.0;
  for (long s = 0; s <= total; ++s) {
    const double w = ways[na][static_cast<std::size_t>(s)];
    if (w == 0.0) continue;
    all += w;
    if (std::abs(static_cast<double>(s) - expected2) >= dev - 1e-9) extreme += w;
  }
  return std::min(1.0, extreme / all);
}

double wilcoxon_normal_p(const std::vector<double>& a, const std::vector<double>& b) {
  check_samples(a, b);
  const auto ranks = doubled_midranks(pooled(a, b));
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  double w = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) w += static_cast<double>(ranks.doubled[i]) / 2.0;
  const double mean = na * (n + 1.0) / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - ranks.tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

WilcoxonResult wilcoxon_rank_sum(const std::vector<double>& a, const std::vector<double>& b) {
  check_samples(a, b);
  WilcoxonResult r;
  const auto ranks = doubled_midranks(pooled(a, b));
  for (std::size_t i = 0; i < a.size(); ++i) r.statistic += static_cast<double>(ranks.doubled[i]) / 2.0;
  r.exact = a.size() + b.size() <= kWilcoxonExactLimit;
  r.p_value = r.exact ? wilcoxon_exact_p(a, b) : wilcoxon_normal_p(a, b);
  return r;
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal_distribution<double>(), p); }

double t_quantile(double p, double dof) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(dof), p);
}

namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0, 1)");
}

}  // namespace

Interval proportion_ci_rate(double p_hat, std::size_t n, double level) {
  check_level(level);
  if (n == 0) throw InsufficientDataError("proportion interval needs at least one trial");
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw ValidationError("proportion must lie in [0, 1]");
  const double z = normal_quantile(0.5 + level / 2.0);
  const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
  return {p_hat, std::max(0.0, p_hat - half), std::min(1.0, p_hat + half)};
}

Interval proportion_ci(std::size_t k, std::size_t n, double level) {
  if (k > n) throw ValidationError("successes exceed trials");
  if (n == 0) throw InsufficientDataError("proportion interval needs at least one trial");
  return proportion_ci_rate(static_cast<double>(k) / static_cast<double>(n), n, level);
}

Interval mean_ci(const std::vector<double>& values, double level) {
  check_level(level);
  if (values.size() < 2) throw InsufficientDataError("mean interval needs at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double half = t_quantile(0.5 + level / 2.0, n - 1.0) * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return {mean, mean - half, mean + half};
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw InsufficientDataError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile probability must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BoxStats boxplot_stats(const std::vector<double>& values) {
  if (values.empty()) throw InsufficientDataError("box plot of an empty group");
  std::vector<double> v(values);
  std::sort(v.begin(), v.end());
  BoxStats s;
  s.min = v.front();
  s.max = v.back();
  s.q1 = quantile_type7(v, 0.25);
  s.median = quantile_type7(v, 0.5);
  s.q3 = quantile_type7(v, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = s.q1;
  s.whisker_high = s.q3;
  bool have_low = false;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      s.outliers.push_back(x);
      continue;
    }
    if (!have_low) {
      s.whisker_low = x;
      have_low = true;
    }
    s.whisker_high = x;
  }
  return s;
}

std::vector<std::pair<std::string, BoxStats>> boxplot_stats(const std::vector<NamedGroup>& groups) {
  std::vector<std::pair<std::string, BoxStats>> out;
  for (const auto& g : groups) {
    try {
      out.emplace_back(g.name, boxplot_stats(g.values));
    } catch (const InsufficientDataError&) {
      throw InsufficientDataError("box plot group '" + g.name + "' is empty");
    }
  }
  return out;
}

}  // namespace photostyle
