#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "sl/common.hpp"
#include "sl/matrix.hpp"

namespace sl {

struct MetaInfo {
  bool degenerate = false;  // zero-sum NNLS solution replaced by uniform weights
  int iterations = 0;
};

namespace meta_detail {

constexpr double kProbClip = 1e-6;

// Solve the passive-set least squares subproblem of Lawson-Hanson on the
// precomputed Gram system; tiny ridge keeps duplicate candidate columns
// from breaking the factorization.
inline std::vector<double> solve_passive(const Matrix& gram, const std::vector<double>& aty,
                                         const std::vector<std::size_t>& passive) {
  const std::size_t m = passive.size();
  Matrix g(m, m);
  std::vector<double> b(m);
  double diag_max = 0.0;
  for (std::size_t a = 0; a < m; ++a) diag_max = std::max(diag_max, gram(passive[a], passive[a]));
  const double ridge = diag_max * 1e-13;
  for (std::size_t a = 0; a < m; ++a) {
    b[a] = aty[passive[a]];
    for (std::size_t c = 0; c < m; ++c) g(a, c) = gram(passive[a], passive[c]);
    g(a, a) += ridge;
  }
  require(cholesky_in_place(g), "nnls: singular passive-set system");
  cholesky_solve(g, b);
  return b;
}

}  // namespace meta_detail

// Non-negative least squares, argmin_{w >= 0} ||y - Z w||^2, by the
// Lawson-Hanson active-set method on the Gram system. KKT tolerance is
// 1e-10 relative to the largest gradient entry at w = 0.
inline std::vector<double> nnls(const Matrix& z, std::span<const double> y,
                                double kkt_tol = 1e-10) {
  require(z.rows() == y.size(), "nnls: size mismatch");
  const std::size_t n = z.rows(), k = z.cols();
  require(k >= 1, "nnls: need at least one column");
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i)
      require(std::isfinite(z(i, j)), "nnls: non-finite entry in Z");

  Matrix gram(k, k);
  std::vector<double> aty(k);
  for (std::size_t a = 0; a < k; ++a) {
    aty[a] = dot(z.col_span(a), y);
    for (std::size_t c = a; c < k; ++c) {
      const double v = dot(z.col_span(a), z.col_span(c));
      gram(a, c) = v;
      gram(c, a) = v;
    }
  }

  std::vector<double> x(k, 0.0);
  std::vector<bool> in_passive(k, false);
  std::vector<std::size_t> passive;
  double grad_scale = 0.0;
  for (std::size_t j = 0; j < k; ++j) grad_scale = std::max(grad_scale, std::fabs(aty[j]));
  const double tol = kkt_tol * std::max(grad_scale, 1.0);

  std::vector<double> w(k);
  for (int outer = 0; outer < 30 * static_cast<int>(k) + 100; ++outer) {
    // Gradient of 1/2 ||y - Zx||^2 is Z'Zx - Z'y; w holds its negation.
    for (std::size_t j = 0; j < k; ++j) {
      double g = aty[j];
      for (std::size_t c = 0; c < k; ++c)
        if (x[c] != 0.0) g -= gram(j, c) * x[c];
      w[j] = g;
    }
    std::size_t best = k;
    double best_w = tol;
    for (std::size_t j = 0; j < k; ++j)
      if (!in_passive[j] && w[j] > best_w) {
        best_w = w[j];
        best = j;
      }
    if (best == k) break;  // KKT satisfied
    in_passive[best] = true;
    passive.push_back(best);

    for (int inner = 0; inner < 30 * static_cast<int>(k) + 100; ++inner) {
      const std::vector<double> s = meta_detail::solve_passive(gram, aty, passive);
      double s_min = std::numeric_limits<double>::infinity();
      for (double v : s) s_min = std::min(s_min, v);
      if (s_min > 0.0) {
        for (std::size_t a = 0; a < passive.size(); ++a) x[passive[a]] = s[a];
        break;
      }
      double alpha = 1.0;
      for (std::size_t a = 0; a < passive.size(); ++a)
        if (s[a] <= 0.0) {
          const double xa = x[passive[a]];
          if (xa - s[a] > 0.0) alpha = std::min(alpha, xa / (xa - s[a]));
        }
      for (std::size_t a = 0; a < passive.size(); ++a)
        x[passive[a]] = std::max(0.0, x[passive[a]] + alpha * (s[a] - x[passive[a]]));
      std::vector<std::size_t> next;
      for (std::size_t j : passive) {
        if (x[j] > 1e-14 * std::max(1.0, grad_scale)) {
          next.push_back(j);
        } else {
          x[j] = 0.0;
          in_passive[j] = false;
        }
      }
      passive = std::move(next);
      if (passive.empty()) break;
    }
  }
  return x;
}

// Continuous-outcome meta-learner: NNLS weights rescaled onto the simplex.
// The all-zero degenerate solution falls back to uniform weights.
inline std::vector<double> meta_nnls(const Matrix& z, std::span<const double> y,
                                     MetaInfo* info = nullptr) {
  std::vector<double> x = nnls(z, y);
  double total = 0.0;
  for (double v : x) total += v;
  if (total <= 0.0) {
    if (info) info->degenerate = true;
    const double u = 1.0 / static_cast<double>(x.size());
    for (double& v : x) v = u;
    return x;
  }
  for (double& v : x) v /= total;
  return x;
}

// Negative log-likelihood of q = Zw with q clipped away from {0,1}.
inline double meta_nll_loss(const Matrix& z, std::span<const double> y,
                            std::span<const double> w) {
  const std::size_t n = z.rows(), k = z.cols();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < k; ++j) q += z(i, j) * w[j];
    q = std::clamp(q, meta_detail::kProbClip, 1.0 - meta_detail::kProbClip);
    loss -= y[i] == 1.0 ? std::log(q) : std::log1p(-q);
  }
  return loss;
}

// Binary-outcome meta-learner: minimize the log-likelihood loss over the
// probability simplex by exponentiated gradient (mirror descent) from
// uniform weights, step 1.0 with halving line search; stops when the loss
// improvement drops below 1e-10 or after 10000 iterations.
inline std::vector<double> meta_nll(const Matrix& z, std::span<const double> y,
                                    MetaInfo* info = nullptr) {
  const std::size_t n = z.rows(), k = z.cols();
  require(n == y.size(), "meta_nll: size mismatch");
  require(k >= 1, "meta_nll: need at least one column");
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i)
      require(z(i, j) >= 0.0 && z(i, j) <= 1.0,
              "meta_nll: entries must be probabilities in [0,1]");
  for (std::size_t i = 0; i < n; ++i)
    require(y[i] == 0.0 || y[i] == 1.0, "meta_nll: outcomes must be 0/1");

  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  double loss = meta_nll_loss(z, y, w);

  std::vector<double> grad(k), trial(k), q(n);
  int iter = 0;
  for (; iter < 10000; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < k; ++j) v += z(i, j) * w[j];
      q[i] = std::clamp(v, meta_detail::kProbClip, 1.0 - meta_detail::kProbClip);
    }
    for (std::size_t j = 0; j < k; ++j) {
      double g = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double u = y[i] == 1.0 ? -1.0 / q[i] : 1.0 / (1.0 - q[i]);
        g += u * z(i, j);
      }
      grad[j] = g / static_cast<double>(n);
    }
    const double gmean =
        std::accumulate(grad.begin(), grad.end(), 0.0) / static_cast<double>(k);

    double step = 1.0;
    double new_loss = loss;
    bool improved = false;
    for (int half = 0; half < 60; ++half) {
      double total = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        trial[j] = w[j] * std::exp(-step * (grad[j] - gmean));
        total += trial[j];
      }
      for (std::size_t j = 0; j < k; ++j) trial[j] /= total;
      const double l = meta_nll_loss(z, y, trial);
      if (l < loss) {
        new_loss = l;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    w = trial;
    if (loss - new_loss < 1e-10) {
      loss = new_loss;
      break;
    }
    loss = new_loss;
  }
  if (info) info->iterations = iter;
  return w;
}

}  // namespace sl
