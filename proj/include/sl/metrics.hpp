#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sl/common.hpp"
#include "sl/simulate.hpp"
#include "sl/stats.hpp"

namespace sl {

enum class MetricName { RSquared, Auc };

inline std::string to_string(MetricName m) {
  return m == MetricName::RSquared ? "r_squared" : "auc";
}

struct MetricValue {
  MetricName name;
  double value;
};

// 1 - sum (y_i - pred_i)^2 / sum (y_i - ybar)^2. May be negative.
inline double r_squared(std::span<const double> pred, std::span<const double> y) {
  require(pred.size() == y.size(), "r_squared: length mismatch");
  require(y.size() >= 2, "r_squared: need at least 2 points");
  const double ybar = mean_of(y);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - pred[i]) * (y[i] - pred[i]);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  require(ss_tot > 0.0, "r_squared: outcome is constant");
  return 1.0 - ss_res / ss_tot;
}

// Mann-Whitney statistic with mid-rank tie handling:
// P(pred+ > pred-) + P(tie)/2. O(n log n).
inline double auc(std::span<const double> pred, std::span<const double> y) {
  require(pred.size() == y.size(), "auc: length mismatch");
  const std::size_t n = pred.size();
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    require(y[i] == 0.0 || y[i] == 1.0, "auc: outcomes must be 0/1");
    n_pos += y[i];
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  require(n_pos > 0.0 && n_neg > 0.0, "auc: both classes must be present");
  const std::vector<double> ranks = midranks(pred);
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (y[i] == 1.0) rank_sum_pos += ranks[i];
  const double u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

// Best-possible performance of the true conditional mean on a fresh test
// draw: R^2 of f for continuous outcomes, AUC of Phi(f) for binary.
inline MetricValue oracle_performance(const ScenarioConfig& config, std::size_t n_test) {
  const OracleTestSet test = oracle_test_set(config, n_test);
  if (config.outcome_kind == OutcomeKind::Continuous)
    return {MetricName::RSquared, r_squared(test.true_f, test.data.y)};
  std::vector<double> prob(test.true_f.size());
  for (std::size_t i = 0; i < prob.size(); ++i) prob[i] = normal_cdf(test.true_f[i]);
  return {MetricName::Auc, auc(prob, test.data.y)};
}

}  // namespace sl
