#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "sl/common.hpp"
#include "sl/dataset.hpp"
#include "sl/folds.hpp"
#include "sl/learner_base.hpp"
#include "sl/matrix.hpp"
#include "sl/rng.hpp"
#include "sl/stats.hpp"

namespace sl {

// Solution path over a decreasing lambda grid; coefficients are on the
// original (unstandardized) scale.
struct LassoPath {
  std::vector<double> lambdas;      // strictly decreasing
  Matrix coefs;                     // p x n_lambda
  std::vector<double> intercepts;   // per lambda
  std::vector<double> cv_loss;      // mean held-out loss per lambda, if CV ran
  int selected = -1;                // CV-minimizing index

  double selected_lambda() const {
    require(selected >= 0, "lasso path: no lambda selected");
    return lambdas[static_cast<std::size_t>(selected)];
  }
};

namespace lasso_detail {

constexpr double kCoefTol = 1e-7;     // max absolute coefficient update
constexpr int kPathLength = 100;
constexpr int kMaxSweeps = 100000;
constexpr double kProbClip = 1e-5;    // IRLS weight guard

// Columns scaled to mean 0 and ||x_j||^2 = n (population variance 1), which
// makes every coordinate update an exact soft-threshold step. Constant
// columns are excluded: their coefficient stays 0.
struct StdDesign {
  Matrix xs;
  std::vector<double> col_mean;
  std::vector<double> col_scale;  // population sd; 0 marks an excluded column
  std::size_t n = 0, p = 0;

  explicit StdDesign(const Matrix& x) : n(x.rows()), p(x.cols()) {
    xs = Matrix(n, p);
    col_mean.resize(p);
    col_scale.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      const double* src = x.col(j);
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += src[i];
      m /= static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) ss += (src[i] - m) * (src[i] - m);
      const double sd = std::sqrt(ss / static_cast<double>(n));
      col_mean[j] = m;
      col_scale[j] = sd;
      double* dst = xs.col(j);
      if (sd > 0.0)
        for (std::size_t i = 0; i < n; ++i) dst[i] = (src[i] - m) / sd;
      else
        for (std::size_t i = 0; i < n; ++i) dst[i] = 0.0;
    }
  }
};

inline double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// One coordinate-descent sweep over the given set; returns max |delta|.
// resid is kept consistent with beta incrementally.
inline double cd_sweep(const StdDesign& d, const std::vector<std::size_t>& cols, double lambda,
                       std::vector<double>& beta, std::vector<double>& resid) {
  const double inv_n = 1.0 / static_cast<double>(d.n);
  double max_delta = 0.0;
  for (std::size_t j : cols) {
    if (d.col_scale[j] == 0.0) continue;
    const double* xj = d.xs.col(j);
    double g = 0.0;
    for (std::size_t i = 0; i < d.n; ++i) g += xj[i] * resid[i];
    const double z = beta[j] + g * inv_n;
    const double nb = soft_threshold(z, lambda);
    const double delta = nb - beta[j];
    if (delta != 0.0) {
      beta[j] = nb;
      for (std::size_t i = 0; i < d.n; ++i) resid[i] -= delta * xj[i];
      max_delta = std::max(max_delta, std::fabs(delta));
    }
  }
  return max_delta;
}

// Active-set iteration: sweep the nonzero set to convergence, then one full
// sweep; repeat until the full sweep activates nothing new.
inline void cd_solve(const StdDesign& d, double lambda, std::vector<double>& beta,
                     std::vector<double>& resid) {
  std::vector<std::size_t> all(d.p);
  for (std::size_t j = 0; j < d.p; ++j) all[j] = j;
  int sweeps = 0;
  while (sweeps < kMaxSweeps) {
    ++sweeps;
    if (cd_sweep(d, all, lambda, beta, resid) < kCoefTol) break;
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < d.p; ++j)
      if (beta[j] != 0.0) active.push_back(j);
    while (sweeps < kMaxSweeps) {
      ++sweeps;
      if (cd_sweep(d, active, lambda, beta, resid) < kCoefTol) break;
    }
  }
}

// Weighted CD sweep for the IRLS inner problem. resid tracks the working
// response minus the current linear predictor.
inline double cd_sweep_weighted(const StdDesign& d, double lambda,
                                const std::vector<double>& w, const std::vector<double>& denom,
                                std::vector<double>& beta, double& intercept,
                                std::vector<double>& resid, double sum_w) {
  const double inv_n = 1.0 / static_cast<double>(d.n);
  double max_delta = 0.0;
  for (std::size_t j = 0; j < d.p; ++j) {
    if (d.col_scale[j] == 0.0 || denom[j] <= 0.0) continue;
    const double* xj = d.xs.col(j);
    double g = 0.0;
    for (std::size_t i = 0; i < d.n; ++i) g += w[i] * xj[i] * resid[i];
    const double z = beta[j] * denom[j] + g * inv_n;
    const double nb = soft_threshold(z, lambda) / denom[j];
    const double delta = nb - beta[j];
    if (delta != 0.0) {
      beta[j] = nb;
      for (std::size_t i = 0; i < d.n; ++i) resid[i] -= delta * xj[i];
      max_delta = std::max(max_delta, std::fabs(delta));
    }
  }
  double g0 = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) g0 += w[i] * resid[i];
  const double d0 = g0 / sum_w;
  if (d0 != 0.0) {
    intercept += d0;
    for (std::size_t i = 0; i < d.n; ++i) resid[i] -= d0;
    max_delta = std::max(max_delta, std::fabs(d0));
  }
  return max_delta;
}

struct FitState {
  std::vector<double> beta;  // standardized scale
  double intercept = 0.0;    // standardized scale
};

// Penalized logistic fit at one lambda via IRLS with inner coordinate
// descent, warm-started from state.
inline void irls_solve(const StdDesign& d, const std::vector<double>& y, double lambda,
                       FitState& state) {
  const std::size_t n = d.n;
  std::vector<double> eta(n), w(n), resid(n), denom(d.p);
  for (int outer = 0; outer < 100; ++outer) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = state.intercept;
      for (std::size_t j = 0; j < d.p; ++j)
        if (state.beta[j] != 0.0) v += d.xs(i, j) * state.beta[j];
      eta[i] = v;
    }
    double sum_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = std::clamp(logistic(eta[i]), kProbClip, 1.0 - kProbClip);
      w[i] = prob * (1.0 - prob);
      resid[i] = (y[i] - prob) / w[i];  // working response minus eta
      sum_w += w[i];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < d.p; ++j) {
      if (d.col_scale[j] == 0.0) {
        denom[j] = 0.0;
        continue;
      }
      const double* xj = d.xs.col(j);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += w[i] * xj[i] * xj[i];
      denom[j] = s * inv_n;
    }
    double outer_change = 0.0;
    for (int inner = 0; inner < 1000; ++inner) {
      const double delta =
          cd_sweep_weighted(d, lambda, w, denom, state.beta, state.intercept, resid, sum_w);
      outer_change = std::max(outer_change, delta);
      if (delta < kCoefTol) break;
    }
    if (outer_change < kCoefTol) break;
  }
}

inline std::vector<double> lambda_grid(double lambda_max, std::size_t n, std::size_t p) {
  const double ratio = n > p ? 1e-4 : 1e-2;
  std::vector<double> grid(kPathLength);
  const double log_max = std::log(lambda_max);
  const double log_min = std::log(lambda_max * ratio);
  for (int k = 0; k < kPathLength; ++k)
    grid[static_cast<std::size_t>(k)] =
        std::exp(log_max + (log_min - log_max) * k / (kPathLength - 1.0));
  grid.front() = lambda_max;  // exact so the first fit is the null model
  return grid;
}

}  // namespace lasso_detail

// Fit the coordinate-descent lasso path. If lambdas is empty, a 100-point
// log-spaced grid from lambda_max down to lambda_max * (1e-4 if n > p else
// 1e-2) is used. Binary outcomes use IRLS around the logistic loss.
inline LassoPath lasso_path(const Matrix& x, const std::vector<double>& y, OutcomeKind kind,
                            std::vector<double> lambdas = {}) {
  require(x.rows() == y.size(), "lasso_path: size mismatch");
  const std::size_t n = x.rows(), p = x.cols();
  require(n >= 2 && p >= 1, "lasso_path: need n >= 2 and p >= 1");
  const lasso_detail::StdDesign design(x);

  const double ybar = mean_of(y);
  double lambda_max = 0.0;
  {
    // Gradient of the loss at the null model; for binary outcomes the null
    // model predicts the base rate.
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < p; ++j) {
      if (design.col_scale[j] == 0.0) continue;
      const double* xj = design.xs.col(j);
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i) g += xj[i] * (y[i] - ybar);
      lambda_max = std::max(lambda_max, std::fabs(g) * inv_n);
    }
    if (lambda_max <= 0.0) lambda_max = 1e-3;  // all columns constant or y constant
  }
  if (lambdas.empty()) lambdas = lasso_detail::lambda_grid(lambda_max, n, p);
  for (std::size_t k = 1; k < lambdas.size(); ++k)
    require(lambdas[k] < lambdas[k - 1], "lasso_path: lambdas must be strictly decreasing");

  LassoPath path;
  path.lambdas = lambdas;
  path.coefs = Matrix(p, lambdas.size());
  path.intercepts.assign(lambdas.size(), 0.0);

  lasso_detail::FitState state;
  state.beta.assign(p, 0.0);

  if (kind == OutcomeKind::Continuous) {
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - ybar;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      lasso_detail::cd_solve(design, lambdas[k], state.beta, resid);
      double* out = path.coefs.col(k);
      double intercept = ybar;
      for (std::size_t j = 0; j < p; ++j) {
        out[j] = design.col_scale[j] > 0.0 ? state.beta[j] / design.col_scale[j] : 0.0;
        intercept -= out[j] * design.col_mean[j];
      }
      path.intercepts[k] = intercept;
    }
  } else {
    const double pbar = std::clamp(ybar, lasso_detail::kProbClip, 1.0 - lasso_detail::kProbClip);
    state.intercept = std::log(pbar / (1.0 - pbar));
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      lasso_detail::irls_solve(design, y, lambdas[k], state);
      double* out = path.coefs.col(k);
      double intercept = state.intercept;
      for (std::size_t j = 0; j < p; ++j) {
        out[j] = design.col_scale[j] > 0.0 ? state.beta[j] / design.col_scale[j] : 0.0;
        intercept -= out[j] * design.col_mean[j];
      }
      path.intercepts[k] = intercept;
    }
  }
  return path;
}

class LassoModel final : public Model {
 public:
  LassoModel(LassoPath path, OutcomeKind kind, std::size_t p)
      : path_(std::move(path)), kind_(kind), p_(p) {
    const auto k = static_cast<std::size_t>(path_.selected);
    coef_.assign(path_.coefs.col(k), path_.coefs.col(k) + p_);
    intercept_ = path_.intercepts[k];
  }

  std::size_t n_features() const override { return p_; }

  std::vector<double> predict(const Matrix& x) const override {
    check_features(x);
    std::vector<double> out(x.rows(), intercept_);
    for (std::size_t j = 0; j < p_; ++j) {
      if (coef_[j] == 0.0) continue;
      const double* xj = x.col(j);
      for (std::size_t i = 0; i < x.rows(); ++i) out[i] += coef_[j] * xj[i];
    }
    if (kind_ == OutcomeKind::Binary)
      for (double& v : out) v = logistic(v);
    return out;
  }

  const LassoPath& path() const { return path_; }
  const std::vector<double>& coefficients() const { return coef_; }
  double intercept() const { return intercept_; }

  std::vector<std::size_t> nonzero_features() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < p_; ++j)
      if (coef_[j] != 0.0) out.push_back(j);
    return out;
  }

 private:
  LassoPath path_;
  std::vector<double> coef_;
  double intercept_ = 0.0;
  OutcomeKind kind_;
  std::size_t p_;
};

// Path fit plus 10-fold cross-validation (stratified for binary outcomes)
// to select lambda; the returned model is the full-data fit at the
// CV-minimizing lambda. Held-out loss is squared error for continuous
// outcomes and binomial deviance for binary ones.
inline LassoModel fit_lasso(const Dataset& d, int folds, Rng rng) {
  const std::size_t n = d.n_rows(), p = d.n_cols();
  require(n >= 20, "fit_lasso: need at least 20 rows for cross-validation");
  require(folds >= 2, "fit_lasso: need at least 2 folds");

  LassoPath full = lasso_path(d.x, d.y, d.outcome_kind);
  const std::size_t n_lambda = full.lambdas.size();

  const bool binary = d.outcome_kind == OutcomeKind::Binary;
  const FoldAssignment fold_assign =
      make_folds(n, folds, binary ? &d.y : nullptr, rng.fork("lasso-cv-folds"));

  std::vector<double> loss_sum(n_lambda, 0.0);
  for (int v = 0; v < folds; ++v) {
    const std::vector<std::size_t> train = fold_assign.rows_not_in_fold(v);
    const std::vector<std::size_t> test = fold_assign.rows_in_fold(v);
    Matrix xt(train.size(), p);
    std::vector<double> yt(train.size());
    for (std::size_t r = 0; r < train.size(); ++r) {
      yt[r] = d.y[train[r]];
      for (std::size_t j = 0; j < p; ++j) xt(r, j) = d.x(train[r], j);
    }
    const LassoPath fold_path = lasso_path(xt, yt, d.outcome_kind, full.lambdas);
    for (std::size_t k = 0; k < n_lambda; ++k) {
      const double* coef = fold_path.coefs.col(k);
      for (std::size_t row : test) {
        double eta = fold_path.intercepts[k];
        for (std::size_t j = 0; j < p; ++j)
          if (coef[j] != 0.0) eta += coef[j] * d.x(row, j);
        if (!binary) {
          const double e = d.y[row] - eta;
          loss_sum[k] += e * e;
        } else {
          const double prob = std::clamp(logistic(eta), 1e-12, 1.0 - 1e-12);
          loss_sum[k] -= d.y[row] == 1.0 ? std::log(prob) : std::log1p(-prob);
        }
      }
    }
  }
  for (double& v : loss_sum) v /= static_cast<double>(n);
  full.cv_loss = loss_sum;
  // Ties resolve to the larger lambda (sparser model).
  full.selected = 0;
  for (std::size_t k = 1; k < n_lambda; ++k)
    if (loss_sum[k] < loss_sum[static_cast<std::size_t>(full.selected)])
      full.selected = static_cast<int>(k);

  return LassoModel(std::move(full), d.outcome_kind, p);
}

}  // namespace sl
