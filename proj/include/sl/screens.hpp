#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "sl/common.hpp"
#include "sl/csv.hpp"
#include "sl/dataset.hpp"
#include "sl/forest.hpp"
#include "sl/lasso.hpp"
#include "sl/rng.hpp"
#include "sl/stats.hpp"

namespace sl {

enum class ScreenKind { AllVars, UnivarCorP, RankCorTopK, RFImportanceTopK, LassoNonzero };

struct ScreenSpec {
  ScreenKind kind = ScreenKind::AllVars;
  double p_threshold = 0.0;  // UnivarCorP
  int k = 0;                 // top-k screens

  static ScreenSpec all_vars() { return {ScreenKind::AllVars, 0.0, 0}; }

  static ScreenSpec univar_cor(double threshold) {
    require(threshold > 0.0 && threshold < 1.0, "screen: p threshold must be in (0,1)");
    return {ScreenKind::UnivarCorP, threshold, 0};
  }

  static ScreenSpec rank_cor_top(int k) {
    require(k >= 1, "screen: k must be at least 1");
    return {ScreenKind::RankCorTopK, 0.0, k};
  }

  static ScreenSpec rf_importance_top(int k) {
    require(k >= 1, "screen: k must be at least 1");
    return {ScreenKind::RFImportanceTopK, 0.0, k};
  }

  static ScreenSpec lasso_nonzero() { return {ScreenKind::LassoNonzero, 0.0, 0}; }

  std::string name() const {
    switch (kind) {
      case ScreenKind::AllVars:
        return "all";
      case ScreenKind::UnivarCorP:
        return "cor-p:" + format_double(p_threshold);
      case ScreenKind::RankCorTopK:
        return "rank-top:" + std::to_string(k);
      case ScreenKind::RFImportanceTopK:
        return "rf-top:" + std::to_string(k);
      case ScreenKind::LassoNonzero:
        return "lasso";
    }
    return "";
  }

  bool operator==(const ScreenSpec&) const = default;
};

enum class ScreenSetName { NoScreens, LassoOnly, All, AllMinusLasso };

inline std::string to_string(ScreenSetName s) {
  switch (s) {
    case ScreenSetName::NoScreens:
      return "none";
    case ScreenSetName::LassoOnly:
      return "lasso";
    case ScreenSetName::All:
      return "all";
    case ScreenSetName::AllMinusLasso:
      return "all-minus-lasso";
  }
  return "";
}

inline ScreenSetName parse_screen_set(std::string_view s) {
  if (s == "none") return ScreenSetName::NoScreens;
  if (s == "lasso") return ScreenSetName::LassoOnly;
  if (s == "all") return ScreenSetName::All;
  if (s == "all-minus-lasso") return ScreenSetName::AllMinusLasso;
  throw Error("unknown screen set '" + std::string(s) +
              "' (expected none, lasso, all, all-minus-lasso)");
}

// Screen tuning depends on the feature count: for p = 10 the library is the
// all-variables screen, one univariate correlation screen and the lasso;
// for p > 10 it adds rank-correlation and forest-importance screens.
inline std::vector<ScreenSpec> expand_screen_set(ScreenSetName name, std::size_t p) {
  require(p >= 1, "expand_screen_set: p must be positive");
  switch (name) {
    case ScreenSetName::NoScreens:
      return {ScreenSpec::all_vars()};
    case ScreenSetName::LassoOnly:
      return {ScreenSpec::lasso_nonzero()};
    case ScreenSetName::All:
    case ScreenSetName::AllMinusLasso: {
      std::vector<ScreenSpec> out;
      out.push_back(ScreenSpec::all_vars());
      if (p <= 10) {
        out.push_back(ScreenSpec::univar_cor(0.2));
      } else {
        out.push_back(ScreenSpec::rank_cor_top(10));
        out.push_back(ScreenSpec::rank_cor_top(25));
        out.push_back(ScreenSpec::rank_cor_top(50));
        out.push_back(ScreenSpec::univar_cor(0.2));
        out.push_back(ScreenSpec::univar_cor(0.4));
        out.push_back(ScreenSpec::rf_importance_top(10));
        out.push_back(ScreenSpec::rf_importance_top(25));
      }
      if (name == ScreenSetName::All) out.push_back(ScreenSpec::lasso_nonzero());
      return out;
    }
  }
  throw Error("expand_screen_set: unreachable");
}

namespace screen_detail {

// Per-column statistics shared by screens from the same family. Computing
// them once per training fold keeps repeated screens (e.g. rank-top 10/25/50)
// from refitting the same forest or lasso.
struct ScreenStats {
  std::vector<double> pearson_p;
  std::vector<double> spearman_p;
  std::vector<double> abs_spearman_r;
  std::vector<double> abs_pearson_r;
  std::vector<double> rf_importance;
  std::vector<std::size_t> lasso_nonzero;
};

inline std::vector<double> pearson_pvalues(const Dataset& d) {
  std::vector<double> out(d.n_cols());
  for (std::size_t j = 0; j < d.n_cols(); ++j)
    out[j] = pearson_cor_test_pvalue(d.x.col_span(j), {d.y.data(), d.y.size()});
  return out;
}

inline std::vector<double> rf_screen_importance(const Dataset& d, Rng rng) {
  require(d.n_rows() >= 10, "rf screen: need at least 10 rows");
  ForestConfig cfg;
  cfg.n_trees = 1000;
  cfg.min_node_size = d.outcome_kind == OutcomeKind::Continuous ? 5 : 1;
  const auto fit = grow_forest(d.x, d.y, d.outcome_kind, cfg, rng);
  return fit->importance(cfg.min_node_size);
}

inline std::vector<std::size_t> lasso_nonzero_set(const Dataset& d, Rng rng) {
  require(d.n_rows() >= 20, "lasso screen: need at least 20 rows for cross-validation");
  const LassoModel model = fit_lasso(d, 10, rng);
  return model.nonzero_features();
}

// Largest |marginal correlation| columns, used when a screen selects
// nothing; two columns keep interaction-capable learners usable.
inline std::vector<std::size_t> fallback_columns(const Dataset& d) {
  const std::size_t p = d.n_cols();
  std::vector<double> abs_r(p);
  for (std::size_t j = 0; j < p; ++j)
    abs_r[j] = std::fabs(pearson_cor(d.x.col_span(j), {d.y.data(), d.y.size()}));
  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return abs_r[a] > abs_r[b]; });
  idx.resize(std::min<std::size_t>(2, p));
  return idx;
}

inline std::vector<std::size_t> top_k_by(const std::vector<double>& score, int k,
                                         bool smaller_is_better,
                                         const std::vector<double>* tiebreak_desc) {
  const std::size_t p = score.size();
  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double sa = smaller_is_better ? score[a] : -score[a];
    const double sb = smaller_is_better ? score[b] : -score[b];
    if (sa != sb) return sa < sb;
    if (tiebreak_desc && (*tiebreak_desc)[a] != (*tiebreak_desc)[b])
      return (*tiebreak_desc)[a] > (*tiebreak_desc)[b];
    return a < b;  // deterministic final tie-break
  });
  idx.resize(std::min<std::size_t>(static_cast<std::size_t>(k), p));
  return idx;
}

}  // namespace screen_detail

// Apply one screening algorithm. The result is never empty; the RF and
// lasso screens are the only seed-dependent ones.
inline FeatureSubset fit_screen(const Dataset& d, const ScreenSpec& spec, Rng rng) {
  const std::size_t p = d.n_cols();
  require(p >= 1, "fit_screen: dataset has no columns");
  std::vector<std::size_t> keep;

  switch (spec.kind) {
    case ScreenKind::AllVars:
      return all_features(p);
    case ScreenKind::UnivarCorP: {
      const std::vector<double> pv = screen_detail::pearson_pvalues(d);
      for (std::size_t j = 0; j < p; ++j)
        if (pv[j] <= spec.p_threshold) keep.push_back(j);
      break;
    }
    case ScreenKind::RankCorTopK: {
      if (static_cast<std::size_t>(spec.k) >= p) return all_features(p);
      std::vector<double> pv(p), abs_r(p);
      const std::vector<double> ry = midranks({d.y.data(), d.y.size()});
      for (std::size_t j = 0; j < p; ++j) {
        const std::vector<double> rx = midranks(d.x.col_span(j));
        pv[j] = pearson_cor_test_pvalue(rx, ry);
        abs_r[j] = std::fabs(pearson_cor(rx, ry));
      }
      keep = screen_detail::top_k_by(pv, spec.k, true, &abs_r);
      break;
    }
    case ScreenKind::RFImportanceTopK: {
      if (static_cast<std::size_t>(spec.k) >= p) return all_features(p);
      const std::vector<double> imp = screen_detail::rf_screen_importance(d, rng);
      keep = screen_detail::top_k_by(imp, spec.k, false, nullptr);
      break;
    }
    case ScreenKind::LassoNonzero:
      keep = screen_detail::lasso_nonzero_set(d, rng);
      break;
  }

  if (keep.empty()) keep = screen_detail::fallback_columns(d);
  return make_feature_subset(std::move(keep), p);
}

}  // namespace sl
