#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "sl/common.hpp"

namespace sl {

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double reg_incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "reg_incomplete_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of a Student-t statistic with df degrees of freedom,
// P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2).
inline double student_t_two_sided_p(double t, double df) {
  require(df > 0.0, "student_t_two_sided_p: df must be positive");
  if (std::isinf(t)) return 0.0;
  return reg_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Pearson correlation; 0 for constant inputs.
inline double pearson_cor(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "pearson_cor: length mismatch");
  const std::size_t n = x.size();
  require(n >= 2, "pearson_cor: need at least 2 points");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

// Two-sided p-value of the correlation t-test, t = r sqrt((n-2)/(1-r^2)).
// Constant input carries no evidence and yields p = 1.
inline double pearson_cor_test_pvalue(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "pearson_cor_test_pvalue: length mismatch");
  const std::size_t n = x.size();
  require(n >= 3, "pearson_cor_test_pvalue: need at least 3 points");
  const bool cx = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
  const bool cy = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
  if (cx || cy) return 1.0;
  const double r = pearson_cor(x, y);
  const double df = static_cast<double>(n - 2);
  const double denom = 1.0 - r * r;
  if (denom <= 0.0) return 0.0;
  const double t = r * std::sqrt(df / denom);
  return student_t_two_sided_p(t, df);
}

// Mid-ranks (ties share the average of the ranks they occupy), 1-based.
inline std::vector<double> midranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Rank (Spearman) correlation test: mid-ranks substituted into the Pearson
// correlation t-test.
inline double spearman_cor_test_pvalue(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "spearman_cor_test_pvalue: length mismatch");
  const std::vector<double> rx = midranks(x);
  const std::vector<double> ry = midranks(y);
  return pearson_cor_test_pvalue(rx, ry);
}

inline double spearman_cor(std::span<const double> x, std::span<const double> y) {
  const std::vector<double> rx = midranks(x);
  const std::vector<double> ry = midranks(y);
  return pearson_cor(rx, ry);
}

}  // namespace sl
