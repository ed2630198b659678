#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "sl/common.hpp"
#include "sl/matrix.hpp"
#include "sl/rng.hpp"

namespace sl {

// Axis-aligned regression tree with exact best-split search by variance
// reduction. Shared by random forests (bootstrap rows, mtry feature
// sampling, node-size stopping) and gradient boosting (all rows, depth
// limit, leaf-size floor, Newton leaf values via optional hessians).
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t count = 0;     // training rows reaching the node (with multiplicity)
  double threshold = 0.0;     // go left when x < threshold
  double value = 0.0;         // node mean (or sum_g / sum_h)
  double gain = 0.0;          // split SSE decrease, 0 at leaves
};

struct Tree {
  std::vector<TreeNode> nodes;

  // min_split lets one grown tree answer for any larger stopping size: a
  // node too small to have been split under that rule acts as a leaf.
  double predict_row(const double* row, std::size_t stride, int min_split) const {
    std::int32_t cur = 0;
    while (true) {
      const TreeNode& nd = nodes[static_cast<std::size_t>(cur)];
      if (nd.feature < 0 || nd.count < min_split) return nd.value;
      cur = row[static_cast<std::size_t>(nd.feature) * stride] < nd.threshold ? nd.left
                                                                              : nd.right;
    }
  }

  void add_importance(std::vector<double>& imp, int min_split) const {
    walk_importance(imp, 0, min_split);
  }

 private:
  void walk_importance(std::vector<double>& imp, std::int32_t cur, int min_split) const {
    const TreeNode& nd = nodes[static_cast<std::size_t>(cur)];
    if (nd.feature < 0 || nd.count < min_split) return;
    imp[static_cast<std::size_t>(nd.feature)] += nd.gain;
    walk_importance(imp, nd.left, min_split);
    walk_importance(imp, nd.right, min_split);
  }
};

struct TreeGrowConfig {
  int max_depth = -1;   // -1: unlimited
  int min_split = 2;    // nodes smaller than this are not split
  int min_leaf = 1;     // children must contain at least this many rows
  int mtry = 0;         // 0: try all features
};

namespace tree_detail {

// Sorted row order per column for the training matrix; computed once per
// fit and shared by every tree grown on it.
inline std::vector<std::int32_t> presort_columns(const Matrix& x) {
  const std::size_t n = x.rows(), p = x.cols();
  std::vector<std::int32_t> order(n * p);
  for (std::size_t j = 0; j < p; ++j) {
    std::int32_t* col = order.data() + j * n;
    std::iota(col, col + n, 0);
    const double* v = x.col(j);
    std::stable_sort(col, col + n,
                     [v](std::int32_t a, std::int32_t b) { return v[a] < v[b]; });
  }
  return order;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<std::int32_t>& col_order)
      : x_(x), col_order_(col_order), n_(x.rows()), p_(x.cols()) {
    side_.resize(n_);
    feat_pool_.resize(p_);
    std::iota(feat_pool_.begin(), feat_pool_.end(), 0);
  }

  // row_count[r] = multiplicity of row r (bootstrap); targets g indexed by
  // original row id; hess optional (Newton leaf values). train_pred, when
  // given, receives the leaf value of every row with multiplicity > 0.
  Tree grow(const std::vector<std::int32_t>& row_count, const std::vector<double>& g,
            const std::vector<double>* hess, const TreeGrowConfig& cfg, Rng rng,
            std::vector<double>* train_pred = nullptr) {
    std::size_t m = 0;
    for (std::size_t r = 0; r < n_; ++r) m += static_cast<std::size_t>(row_count[r]);
    require(m > 0, "tree: empty training set");
    std::iota(feat_pool_.begin(), feat_pool_.end(), 0);

    members_.resize(m * p_);
    scratch_.resize(m);
    for (std::size_t j = 0; j < p_; ++j) {
      const std::int32_t* src = col_order_.data() + j * n_;
      std::int32_t* dst = members_.data() + j * m;
      std::size_t k = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        const std::int32_t r = src[i];
        for (std::int32_t c = 0; c < row_count[static_cast<std::size_t>(r)]; ++c) dst[k++] = r;
      }
    }

    Tree tree;
    tree.nodes.reserve(64);
    struct Work {
      std::int32_t node;
      std::size_t lo, hi;
      int depth;
    };
    std::vector<Work> stack;
    tree.nodes.push_back(TreeNode{});
    stack.push_back({0, 0, m, 0});

    const int mtry = cfg.mtry > 0 ? std::min<int>(cfg.mtry, static_cast<int>(p_))
                                  : static_cast<int>(p_);

    while (!stack.empty()) {
      const Work w = stack.back();
      stack.pop_back();
      const std::size_t seg = w.hi - w.lo;
      const std::int32_t* rows0 = members_.data() + w.lo;  // feature-0 ordering

      double sum_g = 0.0, sum_h = 0.0, min_g = g[static_cast<std::size_t>(rows0[0])],
             max_g = min_g;
      for (std::size_t i = 0; i < seg; ++i) {
        const double gi = g[static_cast<std::size_t>(rows0[i])];
        sum_g += gi;
        min_g = std::min(min_g, gi);
        max_g = std::max(max_g, gi);
        if (hess) sum_h += (*hess)[static_cast<std::size_t>(rows0[i])];
      }
      TreeNode& node = tree.nodes[static_cast<std::size_t>(w.node)];
      node.count = static_cast<std::int32_t>(seg);
      node.value = hess ? sum_g / std::max(sum_h, 1e-12)
                        : sum_g / static_cast<double>(seg);

      const bool pure = min_g == max_g;
      const bool depth_ok = cfg.max_depth < 0 || w.depth < cfg.max_depth;
      if (pure || !depth_ok || seg < static_cast<std::size_t>(std::max(cfg.min_split, 2)) ||
          seg < 2 * static_cast<std::size_t>(cfg.min_leaf)) {
        finish_leaf(tree.nodes[static_cast<std::size_t>(w.node)], w.lo, w.hi, train_pred);
        continue;
      }

      // Best split over a sample of features.
      double best_gain = 0.0;
      std::int32_t best_feat = -1;
      double best_thr = 0.0;
      const double parent_score = sum_g * sum_g / static_cast<double>(seg);
      for (int t = 0; t < mtry; ++t) {
        std::size_t pick = static_cast<std::size_t>(t);
        if (mtry < static_cast<int>(p_)) {
          pick = static_cast<std::size_t>(t) + rng.below(p_ - static_cast<std::size_t>(t));
          std::swap(feat_pool_[static_cast<std::size_t>(t)], feat_pool_[pick]);
          pick = static_cast<std::size_t>(t);
        }
        const std::size_t j = feat_pool_[pick];
        const std::int32_t* rows = members_.data() + j * (members_.size() / p_) + w.lo;
        const double* xv = x_.col(j);
        double left_sum = 0.0;
        std::size_t left_cnt = 0;
        for (std::size_t i = 0; i + 1 < seg; ++i) {
          const std::int32_t r = rows[i];
          left_sum += g[static_cast<std::size_t>(r)];
          ++left_cnt;
          const double v = xv[r], v_next = xv[rows[i + 1]];
          if (v == v_next) continue;
          if (left_cnt < static_cast<std::size_t>(cfg.min_leaf) ||
              seg - left_cnt < static_cast<std::size_t>(cfg.min_leaf))
            continue;
          const double right_sum = sum_g - left_sum;
          const double gain = left_sum * left_sum / static_cast<double>(left_cnt) +
                              right_sum * right_sum / static_cast<double>(seg - left_cnt) -
                              parent_score;
          if (gain > best_gain) {
            best_gain = gain;
            best_feat = static_cast<std::int32_t>(j);
            best_thr = 0.5 * (v + v_next);
          }
        }
      }

      if (best_feat < 0) {
        finish_leaf(tree.nodes[static_cast<std::size_t>(w.node)], w.lo, w.hi, train_pred);
        continue;
      }

      // Stable partition of every feature ordering around the chosen split.
      const double* xb = x_.col(static_cast<std::size_t>(best_feat));
      const std::int32_t* brows = members_.data() +
                                  static_cast<std::size_t>(best_feat) * (members_.size() / p_) +
                                  w.lo;
      std::size_t n_left = 0;
      for (std::size_t i = 0; i < seg; ++i)
        if (xb[brows[i]] < best_thr) ++n_left;
      for (std::size_t i = 0; i < seg; ++i)
        side_[static_cast<std::size_t>(brows[i])] =
            static_cast<std::uint8_t>(xb[brows[i]] < best_thr ? 0 : 1);
      const std::size_t m_all = members_.size() / p_;
      for (std::size_t j = 0; j < p_; ++j) {
        std::int32_t* seg_rows = members_.data() + j * m_all + w.lo;
        std::size_t il = 0, ir = n_left;
        for (std::size_t i = 0; i < seg; ++i) {
          const std::int32_t r = seg_rows[i];
          scratch_[side_[static_cast<std::size_t>(r)] == 0 ? il++ : ir++] = r;
        }
        std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(seg),
                  seg_rows);
      }

      const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.push_back(TreeNode{});
      tree.nodes.push_back(TreeNode{});
      TreeNode& parent = tree.nodes[static_cast<std::size_t>(w.node)];
      parent.feature = best_feat;
      parent.threshold = best_thr;
      parent.gain = best_gain;
      parent.left = left_id;
      parent.right = left_id + 1;
      stack.push_back({left_id + 1, w.lo + n_left, w.hi, w.depth + 1});
      stack.push_back({left_id, w.lo, w.lo + n_left, w.depth + 1});
    }
    return tree;
  }

 private:
  void finish_leaf(const TreeNode& node, std::size_t lo, std::size_t hi,
                   std::vector<double>* train_pred) {
    if (!train_pred) return;
    const std::int32_t* rows = members_.data() + lo;  // feature-0 ordering
    for (std::size_t i = 0; i < hi - lo; ++i)
      (*train_pred)[static_cast<std::size_t>(rows[i])] = node.value;
  }

  const Matrix& x_;
  const std::vector<std::int32_t>& col_order_;
  std::size_t n_, p_;
  std::vector<std::int32_t> members_;   // per-feature sorted member rows, segmented
  std::vector<std::int32_t> scratch_;
  std::vector<std::uint8_t> side_;
  std::vector<std::size_t> feat_pool_;
};

}  // namespace tree_detail

}  // namespace sl
