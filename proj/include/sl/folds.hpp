#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sl/common.hpp"
#include "sl/rng.hpp"

namespace sl {

struct FoldAssignment {
  std::vector<int> fold_of;  // values in [0, n_folds)
  int n_folds = 0;

  std::vector<std::size_t> rows_in_fold(int v) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] == v) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> rows_not_in_fold(int v) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] != v) out.push_back(i);
    return out;
  }
};

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace detail

// Random balanced partition into v folds. With 0/1 labels, each class is
// partitioned independently so per-class fold sizes differ by at most one.
inline FoldAssignment make_folds(std::size_t n, int v, const std::vector<double>* labels,
                                 Rng rng) {
  require(v >= 2, "make_folds: need at least 2 folds");
  require(n >= static_cast<std::size_t>(v), "make_folds: more folds than rows");
  FoldAssignment folds;
  folds.n_folds = v;
  folds.fold_of.assign(n, -1);

  if (!labels) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    detail::shuffle_indices(idx, rng);
    for (std::size_t k = 0; k < n; ++k) folds.fold_of[idx[k]] = static_cast<int>(k % v);
    return folds;
  }

  require(labels->size() == n, "make_folds: label length mismatch");
  std::vector<std::size_t> neg, pos;
  for (std::size_t i = 0; i < n; ++i) {
    require((*labels)[i] == 0.0 || (*labels)[i] == 1.0, "make_folds: labels must be 0/1");
    ((*labels)[i] == 1.0 ? pos : neg).push_back(i);
  }
  for (const auto* cls : {&neg, &pos})
    require(cls->size() >= static_cast<std::size_t>(v),
            "make_folds: a class has fewer members (" + std::to_string(cls->size()) +
                ") than folds (" + std::to_string(v) + ")");
  for (auto* cls : {&neg, &pos}) {
    detail::shuffle_indices(*cls, rng);
    for (std::size_t k = 0; k < cls->size(); ++k)
      folds.fold_of[(*cls)[k]] = static_cast<int>(k % v);
  }
  return folds;
}

}  // namespace sl
