#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "sl/common.hpp"
#include "sl/dataset.hpp"
#include "sl/learner_base.hpp"
#include "sl/stats.hpp"
#include "sl/tree.hpp"

namespace sl {

struct GradBoostConfig {
  int n_trees = 100;
  double shrinkage = 0.1;
  int max_depth = 4;
  int min_obs_node = 10;
};

// Stagewise fit: F0 is the outcome mean (log-odds of the mean for binary);
// each stage fits a depth-limited regression tree to the negative gradient
// and adds it with the shrinkage factor. Binary terminal values use the
// one-step Newton update for the logistic loss. The fit is deterministic
// (no subsampling), so a shorter model is a prefix of a longer one.
struct BoostFit {
  double f0 = 0.0;
  double shrinkage = 0.1;
  std::vector<Tree> trees;
  std::size_t p = 0;
  OutcomeKind kind = OutcomeKind::Continuous;
  std::vector<double> train_loss;  // mean training loss after each stage
};

inline std::shared_ptr<const BoostFit> grow_boost(const Matrix& x,
                                                  const std::vector<double>& y,
                                                  OutcomeKind kind,
                                                  const GradBoostConfig& cfg) {
  require(x.rows() == y.size(), "boost: size mismatch");
  require(cfg.n_trees >= 0, "boost: negative tree count");
  const std::size_t n = x.rows();
  const bool binary = kind == OutcomeKind::Binary;

  auto fit = std::make_shared<BoostFit>();
  fit->shrinkage = cfg.shrinkage;
  fit->p = x.cols();
  fit->kind = kind;

  const double ybar = mean_of(y);
  if (binary) {
    const double pbar = std::clamp(ybar, 1e-12, 1.0 - 1e-12);
    fit->f0 = std::log(pbar / (1.0 - pbar));
  } else {
    fit->f0 = ybar;
  }

  const std::vector<std::int32_t> col_order = tree_detail::presort_columns(x);
  tree_detail::TreeBuilder builder(x, col_order);
  TreeGrowConfig grow_cfg;
  grow_cfg.max_depth = cfg.max_depth;
  grow_cfg.min_leaf = cfg.min_obs_node;
  grow_cfg.min_split = 2;

  std::vector<std::int32_t> ones(n, 1);
  std::vector<double> f(n, fit->f0), grad(n), hess(binary ? n : 0), leaf(n, 0.0);
  fit->trees.reserve(static_cast<std::size_t>(cfg.n_trees));
  fit->train_loss.reserve(static_cast<std::size_t>(cfg.n_trees));
  for (int t = 0; t < cfg.n_trees; ++t) {
    if (binary) {
      for (std::size_t i = 0; i < n; ++i) {
        const double prob = logistic(f[i]);
        grad[i] = y[i] - prob;
        hess[i] = std::max(prob * (1.0 - prob), 1e-12);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) grad[i] = y[i] - f[i];
    }
    fit->trees.push_back(
        builder.grow(ones, grad, binary ? &hess : nullptr, grow_cfg, Rng(0), &leaf));
    for (std::size_t i = 0; i < n; ++i) f[i] += cfg.shrinkage * leaf[i];

    double loss = 0.0;
    if (binary) {
      // log(1 + e^v) = max(v, 0) + log1p(e^{-|v|})
      for (std::size_t i = 0; i < n; ++i) {
        const double v = y[i] == 1.0 ? -f[i] : f[i];
        loss += std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v)));
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) loss += (y[i] - f[i]) * (y[i] - f[i]);
    }
    fit->train_loss.push_back(loss / static_cast<double>(n));
  }
  return fit;
}

class BoostModel final : public Model {
 public:
  BoostModel(std::shared_ptr<const BoostFit> fit, int n_trees)
      : fit_(std::move(fit)), n_trees_(n_trees) {
    require(n_trees >= 0 && static_cast<std::size_t>(n_trees) <= fit_->trees.size(),
            "boost: evaluation stage exceeds grown stages");
  }

  std::vector<double> predict(const Matrix& x) const override {
    check_features(x);
    std::vector<double> out(x.rows());
    std::vector<double> row(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) row[j] = x(i, j);
      double f = fit_->f0;
      for (int t = 0; t < n_trees_; ++t)
        f += fit_->shrinkage *
             fit_->trees[static_cast<std::size_t>(t)].predict_row(row.data(), 1, 2);
      out[i] = fit_->kind == OutcomeKind::Binary ? logistic(f) : f;
    }
    return out;
  }

  std::size_t n_features() const override { return fit_->p; }

  const BoostFit& fit() const { return *fit_; }
  int n_trees() const { return n_trees_; }

 private:
  std::shared_ptr<const BoostFit> fit_;
  int n_trees_;
};

inline BoostModel fit_grad_boost(const Dataset& d, const GradBoostConfig& cfg) {
  require(d.n_rows() >= 20, "fit_grad_boost: need at least 20 rows");
  return BoostModel(grow_boost(d.x, d.y, d.outcome_kind, cfg), cfg.n_trees);
}

}  // namespace sl
