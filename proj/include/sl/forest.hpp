#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "sl/common.hpp"
#include "sl/dataset.hpp"
#include "sl/learner_base.hpp"
#include "sl/rng.hpp"
#include "sl/tree.hpp"

namespace sl {

struct ForestConfig {
  int n_trees = 1000;
  int min_node_size = 5;
  int mtry = 0;            // 0: floor(sqrt(p))
  bool track_oob = false;  // out-of-bag error, tracked for diagnostics only
};

// Grown forest state. Trees are grown at grown_min_node; any candidate with
// a larger minimum node size reads the same trees truncated at prediction
// time, which reproduces the stopping rule exactly (split decisions do not
// depend on the stopping size).
struct ForestFit {
  std::vector<Tree> trees;
  int grown_min_node = 5;
  std::size_t p = 0;
  OutcomeKind kind = OutcomeKind::Continuous;
  double oob_error = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> importance(int min_node_size) const {
    std::vector<double> imp(p, 0.0);
    for (const Tree& t : trees) t.add_importance(imp, min_node_size);
    const double scale =
        (kind == OutcomeKind::Binary ? 2.0 : 1.0) / static_cast<double>(trees.size());
    for (double& v : imp) v *= scale;  // Gini decrease is twice the 0/1 SSE decrease
    return imp;
  }
};

// Bootstrap of size n with replacement (subsampling fraction 1), mtry
// features per split, splits by variance reduction (equivalently Gini
// impurity for 0/1 outcomes).
inline std::shared_ptr<const ForestFit> grow_forest(const Matrix& x,
                                                    const std::vector<double>& y,
                                                    OutcomeKind kind, const ForestConfig& cfg,
                                                    Rng rng) {
  require(x.rows() >= 2, "forest: need at least 2 rows");
  require(cfg.n_trees >= 1, "forest: need at least 1 tree");
  const std::size_t n = x.rows();

  auto fit = std::make_shared<ForestFit>();
  fit->grown_min_node = std::max(cfg.min_node_size, 1);
  fit->p = x.cols();
  fit->kind = kind;
  fit->trees.reserve(static_cast<std::size_t>(cfg.n_trees));

  TreeGrowConfig grow_cfg;
  grow_cfg.min_split = fit->grown_min_node;
  grow_cfg.mtry = cfg.mtry > 0
                      ? cfg.mtry
                      : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(x.cols()))));

  const std::vector<std::int32_t> col_order = tree_detail::presort_columns(x);
  tree_detail::TreeBuilder builder(x, col_order);

  std::vector<double> oob_sum(cfg.track_oob ? n : 0, 0.0);
  std::vector<std::int32_t> oob_cnt(cfg.track_oob ? n : 0, 0);
  std::vector<std::int32_t> counts(n);
  std::vector<double> row_buf(x.cols());
  for (int t = 0; t < cfg.n_trees; ++t) {
    Rng tree_rng = rng.fork(static_cast<std::uint64_t>(t));
    counts.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[tree_rng.below(n)];
    fit->trees.push_back(builder.grow(counts, y, nullptr, grow_cfg, tree_rng.fork("split")));
    if (cfg.track_oob) {
      const Tree& tree = fit->trees.back();
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[i] != 0) continue;
        for (std::size_t j = 0; j < x.cols(); ++j) row_buf[j] = x(i, j);
        oob_sum[i] += tree.predict_row(row_buf.data(), 1, fit->grown_min_node);
        ++oob_cnt[i];
      }
    }
  }

  if (cfg.track_oob) {
    double err = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (oob_cnt[i] == 0) continue;
      const double pred = oob_sum[i] / oob_cnt[i];
      if (kind == OutcomeKind::Continuous) {
        err += (y[i] - pred) * (y[i] - pred);
      } else {
        err += (pred >= 0.5 ? 1.0 : 0.0) != y[i] ? 1.0 : 0.0;
      }
      ++used;
    }
    if (used > 0) fit->oob_error = err / static_cast<double>(used);
  }
  return fit;
}

// Prediction is the mean of tree means; for binary outcomes the tree means
// are leaf class-1 fractions, so the result is a probability.
class ForestModel final : public Model {
 public:
  ForestModel(std::shared_ptr<const ForestFit> fit, int min_node_size)
      : fit_(std::move(fit)), min_node_(std::max(min_node_size, fit_->grown_min_node)) {
    require(min_node_size >= fit_->grown_min_node,
            "forest: cannot evaluate below the grown minimum node size");
  }

  std::vector<double> predict(const Matrix& x) const override {
    check_features(x);
    std::vector<double> out(x.rows(), 0.0);
    std::vector<double> row(x.cols());
    const double inv = 1.0 / static_cast<double>(fit_->trees.size());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) row[j] = x(i, j);
      double s = 0.0;
      for (const Tree& t : fit_->trees) s += t.predict_row(row.data(), 1, min_node_);
      out[i] = s * inv;
    }
    return out;
  }

  std::size_t n_features() const override { return fit_->p; }

  const ForestFit& fit() const { return *fit_; }
  int min_node_size() const { return min_node_; }
  std::vector<double> importance() const { return fit_->importance(min_node_); }

 private:
  std::shared_ptr<const ForestFit> fit_;
  int min_node_;
};

inline ForestModel fit_random_forest(const Dataset& d, const ForestConfig& cfg, Rng rng) {
  return ForestModel(grow_forest(d.x, d.y, d.outcome_kind, cfg, rng), cfg.min_node_size);
}

// Impurity importance of a fitted forest; errors for non-forest models.
inline std::vector<double> rf_impurity_importance(const Model& model) {
  const auto* forest = dynamic_cast<const ForestModel*>(&model);
  require(forest != nullptr, "rf_impurity_importance: model is not a random forest");
  return forest->importance();
}

}  // namespace sl
