#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sl/common.hpp"
#include "sl/matrix.hpp"

namespace sl {

enum class OutcomeKind { Continuous, Binary };

inline std::string to_string(OutcomeKind k) {
  return k == OutcomeKind::Continuous ? "continuous" : "binary";
}

// Immutable after construction and safe to share across workers.
struct Dataset {
  Matrix x;
  std::vector<double> y;
  OutcomeKind outcome_kind = OutcomeKind::Continuous;

  std::size_t n_rows() const { return x.rows(); }
  std::size_t n_cols() const { return x.cols(); }
};

// Validates the Dataset invariants: matching sizes, finite entries, and
// strictly {0,1} outcomes in the binary case.
inline Dataset make_dataset(Matrix x, std::vector<double> y, OutcomeKind kind) {
  require(x.rows() == y.size(), "dataset: row count of x must equal length of y");
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const double* c = x.col(j);
    for (std::size_t i = 0; i < x.rows(); ++i)
      require(std::isfinite(c[i]), "dataset: non-finite covariate at row " + std::to_string(i) +
                                       ", column " + std::to_string(j));
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    require(std::isfinite(y[i]), "dataset: non-finite outcome at row " + std::to_string(i));
    if (kind == OutcomeKind::Binary)
      require(y[i] == 0.0 || y[i] == 1.0,
              "dataset: binary outcome must be 0 or 1, got " + std::to_string(y[i]) +
                  " at row " + std::to_string(i));
  }
  return Dataset{std::move(x), std::move(y), kind};
}

// Strictly increasing, non-empty column indices.
struct FeatureSubset {
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
};

inline FeatureSubset make_feature_subset(std::vector<std::size_t> indices, std::size_t p) {
  require(!indices.empty(), "feature subset must not be empty");
  std::sort(indices.begin(), indices.end());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    require(indices[k] < p, "feature subset index " + std::to_string(indices[k]) +
                                " out of range for p=" + std::to_string(p));
    if (k > 0) require(indices[k] != indices[k - 1], "feature subset has duplicate indices");
  }
  return FeatureSubset{std::move(indices)};
}

inline FeatureSubset all_features(std::size_t p) {
  std::vector<std::size_t> idx(p);
  for (std::size_t j = 0; j < p; ++j) idx[j] = j;
  return FeatureSubset{std::move(idx)};
}

// Per-column location/scale pair; invertible to 1e-12 relative error.
struct ColumnScaler {
  std::vector<double> means;
  std::vector<double> sds;

  Matrix apply(const Matrix& x) const {
    require(x.cols() == means.size(), "scaler: column count mismatch");
    Matrix out(x.rows(), x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double m = means[j], s = sds[j];
      const double* src = x.col(j);
      double* dst = out.col(j);
      for (std::size_t i = 0; i < x.rows(); ++i) dst[i] = (src[i] - m) / s;
    }
    return out;
  }

  Matrix invert(const Matrix& z) const {
    require(z.cols() == means.size(), "scaler: column count mismatch");
    Matrix out(z.rows(), z.cols());
    for (std::size_t j = 0; j < z.cols(); ++j) {
      const double m = means[j], s = sds[j];
      const double* src = z.col(j);
      double* dst = out.col(j);
      for (std::size_t i = 0; i < z.rows(); ++i) dst[i] = src[i] * s + m;
    }
    return out;
  }
};

// Center and scale every column to sample mean 0, sample sd 1 (n-1
// denominator, matching the correlation-test formulas).
inline std::pair<Matrix, ColumnScaler> standardize_columns(const Matrix& x) {
  require(x.rows() >= 2, "standardize_columns: need at least 2 rows");
  ColumnScaler scaler;
  scaler.means.resize(x.cols());
  scaler.sds.resize(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    scaler.means[j] = mean(x.col_span(j));
    const double sd = sample_sd(x.col_span(j));
    require(sd > 0.0, "standardize_columns: column " + std::to_string(j) + " is constant");
    scaler.sds[j] = sd;
  }
  return {scaler.apply(x), std::move(scaler)};
}

// Column order preserved; y untouched.
inline Dataset subset_columns(const Dataset& d, const FeatureSubset& s) {
  for (std::size_t idx : s.indices)
    require(idx < d.n_cols(), "subset_columns: index " + std::to_string(idx) +
                                  " out of range for p=" + std::to_string(d.n_cols()));
  require(!s.indices.empty(), "subset_columns: empty subset");
  Matrix out(d.n_rows(), s.indices.size());
  for (std::size_t k = 0; k < s.indices.size(); ++k) {
    const double* src = d.x.col(s.indices[k]);
    std::copy(src, src + d.n_rows(), out.col(k));
  }
  return Dataset{std::move(out), d.y, d.outcome_kind};
}

inline Matrix subset_matrix_columns(const Matrix& x, const FeatureSubset& s) {
  Matrix out(x.rows(), s.indices.size());
  for (std::size_t k = 0; k < s.indices.size(); ++k) {
    require(s.indices[k] < x.cols(), "subset: index out of range");
    const double* src = x.col(s.indices[k]);
    std::copy(src, src + x.rows(), out.col(k));
  }
  return out;
}

}  // namespace sl
