#pragma once

#include <charconv>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "sl/common.hpp"
#include "sl/csv.hpp"
#include "sl/forest.hpp"
#include "sl/gradboost.hpp"
#include "sl/lasso.hpp"
#include "sl/learner_base.hpp"
#include "sl/mars.hpp"

namespace sl {

enum class LearnerKind { Lasso, RandomForest, GradBoost, Mars };

// One base learner with fixed tuning values, restricted to the benchmark
// grid: rf min node size in {5,20,50,100,250}, gbt trees in {100,500,1000}
// with shrinkage in {0.01,0.1}.
struct LearnerSpec {
  LearnerKind kind = LearnerKind::Lasso;
  int min_node_size = 0;  // random forest
  int n_trees = 0;        // gradient boosting
  double shrinkage = 0.0;

  static LearnerSpec lasso() { return {LearnerKind::Lasso, 0, 0, 0.0}; }

  static LearnerSpec random_forest(int min_node_size) {
    require(min_node_size == 5 || min_node_size == 20 || min_node_size == 50 ||
                min_node_size == 100 || min_node_size == 250,
            "learner: rf min_node_size must be one of {5,20,50,100,250}");
    return {LearnerKind::RandomForest, min_node_size, 0, 0.0};
  }

  static LearnerSpec grad_boost(int n_trees, double shrinkage) {
    require(n_trees == 100 || n_trees == 500 || n_trees == 1000,
            "learner: gbt n_trees must be one of {100,500,1000}");
    require(shrinkage == 0.01 || shrinkage == 0.1,
            "learner: gbt shrinkage must be 0.01 or 0.1");
    return {LearnerKind::GradBoost, 0, n_trees, shrinkage};
  }

  static LearnerSpec mars() { return {LearnerKind::Mars, 0, 0, 0.0}; }

  std::string name() const {
    switch (kind) {
      case LearnerKind::Lasso:
        return "lasso";
      case LearnerKind::RandomForest:
        return "rf:" + std::to_string(min_node_size);
      case LearnerKind::GradBoost:
        return "gbt:" + std::to_string(n_trees) + ":" + format_double(shrinkage);
      case LearnerKind::Mars:
        return "mars";
    }
    return "";
  }

  static LearnerSpec parse(std::string_view s);

  bool operator==(const LearnerSpec&) const = default;
};

namespace detail {

inline int parse_int(std::string_view s, const std::string& what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc{} && ptr == s.data() + s.size(), "cannot parse " + what + " from '" +
                                                               std::string(s) + "'");
  return v;
}

inline double parse_real(std::string_view s, const std::string& what) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc{} && ptr == s.data() + s.size(), "cannot parse " + what + " from '" +
                                                               std::string(s) + "'");
  return v;
}

}  // namespace detail

inline LearnerSpec LearnerSpec::parse(std::string_view s) {
  if (s == "lasso") return lasso();
  if (s == "mars") return mars();
  if (s.starts_with("rf:"))
    return random_forest(detail::parse_int(s.substr(3), "rf min_node_size"));
  if (s.starts_with("gbt:")) {
    const std::string_view rest = s.substr(4);
    const std::size_t colon = rest.find(':');
    require(colon != std::string_view::npos, "learner: expected gbt:<n_trees>:<shrinkage>");
    return grad_boost(detail::parse_int(rest.substr(0, colon), "gbt n_trees"),
                      detail::parse_real(rest.substr(colon + 1), "gbt shrinkage"));
  }
  throw Error("unknown learner '" + std::string(s) + "'");
}

// The benchmark learner grid: lasso + 5 forests + 6 boosted trees + mars.
inline std::vector<LearnerSpec> learner_grid(bool include_lasso) {
  std::vector<LearnerSpec> out;
  if (include_lasso) out.push_back(LearnerSpec::lasso());
  for (int mns : {5, 20, 50, 100, 250}) out.push_back(LearnerSpec::random_forest(mns));
  for (int nt : {100, 500, 1000})
    for (double sh : {0.01, 0.1}) out.push_back(LearnerSpec::grad_boost(nt, sh));
  out.push_back(LearnerSpec::mars());
  return out;
}

inline std::unique_ptr<Model> fit_learner(const Dataset& d, const LearnerSpec& spec, Rng rng) {
  switch (spec.kind) {
    case LearnerKind::Lasso:
      return std::make_unique<LassoModel>(fit_lasso(d, 10, rng));
    case LearnerKind::RandomForest: {
      ForestConfig cfg;
      cfg.n_trees = 1000;
      cfg.min_node_size = spec.min_node_size;
      return std::make_unique<ForestModel>(fit_random_forest(d, cfg, rng));
    }
    case LearnerKind::GradBoost: {
      GradBoostConfig cfg;
      cfg.n_trees = spec.n_trees;
      cfg.shrinkage = spec.shrinkage;
      return std::make_unique<BoostModel>(fit_grad_boost(d, cfg));
    }
    case LearnerKind::Mars:
      return std::make_unique<MarsModel>(fit_mars(d));
  }
  throw Error("fit_learner: unreachable");
}

}  // namespace sl
