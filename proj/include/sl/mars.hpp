#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "sl/common.hpp"
#include "sl/dataset.hpp"
#include "sl/learner_base.hpp"
#include "sl/matrix.hpp"

namespace sl {

// One hinge basis function: max(0, x_j - knot) or max(0, knot - x_j).
struct MarsTerm {
  std::size_t feature = 0;
  double knot = 0.0;
  int dir = +1;

  double eval(double x) const {
    const double v = dir > 0 ? x - knot : knot - x;
    return v > 0.0 ? v : 0.0;
  }
};

struct MarsConfig {
  int nk = 0;                    // 0: min(max(21, 2p+1), 1000)
  double forward_thresh = 1e-3;  // stop when the RSS drop falls under thresh * TSS
};

inline int mars_max_terms(std::size_t p) {
  const long nk = std::max<long>(21, 2 * static_cast<long>(p) + 1);
  return static_cast<int>(std::min<long>(nk, 1000));
}

namespace mars_detail {

constexpr double kDepsRel = 1e-9;  // relative tolerance for a usable hinge direction

// Orthonormal basis maintained incrementally (modified Gram-Schmidt with
// one reorthogonalization pass).
struct OrthoBasis {
  std::size_t n = 0;
  std::vector<std::vector<double>> q;

  explicit OrthoBasis(std::size_t n_rows) : n(n_rows) {}

  std::size_t size() const { return q.size(); }

  // Returns the normalized residual direction of col, or empty if col is
  // (numerically) inside the current span.
  std::vector<double> residual_direction(const std::vector<double>& col) const {
    std::vector<double> v = col;
    double norm0 = 0.0;
    for (double x : col) norm0 += x * x;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qk : q) {
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) d += qk[i] * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= d * qk[i];
      }
    double nv = 0.0;
    for (double x : v) nv += x * x;
    if (!(nv > kDepsRel * std::max(norm0, 1e-300))) return {};
    const double inv = 1.0 / std::sqrt(nv);
    for (double& x : v) x *= inv;
    return v;
  }

  void push(std::vector<double> direction) { q.push_back(std::move(direction)); }
};

struct ForwardResult {
  std::vector<MarsTerm> terms;
};

// Greedy forward pass. Adds the hinge pair (over all features and observed
// interior knots) with the largest exact RSS decrease; the per-feature scan
// is O(n * M) using running sums over the rows above the moving knot.
inline ForwardResult forward_pass(const Matrix& x, const std::vector<double>& y, int nk,
                                  double thresh) {
  const std::size_t n = x.rows(), p = x.cols();
  ForwardResult out;

  OrthoBasis basis(n);
  {
    std::vector<double> ones(n, 1.0 / std::sqrt(static_cast<double>(n)));
    basis.push(std::move(ones));
  }
  std::vector<double> resid = y;
  {
    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    for (double& v : resid) v -= ybar;
  }
  double rss = 0.0;
  for (double v : resid) rss += v * v;
  const double tss = rss;
  if (!(tss > 0.0)) return out;  // constant outcome: intercept only

  // Descending row order per feature, shared across forward steps.
  std::vector<std::vector<std::int32_t>> order(p);
  for (std::size_t j = 0; j < p; ++j) {
    order[j].resize(n);
    std::iota(order[j].begin(), order[j].end(), 0);
    const double* v = x.col(j);
    std::stable_sort(order[j].begin(), order[j].end(),
                     [v](std::int32_t a, std::int32_t b) { return v[a] > v[b]; });
  }

  const int max_terms = std::min<int>(nk, static_cast<int>(n / 2));
  std::vector<double> col(n), rtil(n), a0, a1, qrow;

  while (static_cast<int>(basis.size()) + 2 <= max_terms) {
    double best_gain = 0.0;
    std::size_t best_j = 0;
    double best_knot = 0.0;
    bool found = false;

    for (std::size_t j = 0; j < p; ++j) {
      const double* xv = x.col(j);

      for (std::size_t i = 0; i < n; ++i) col[i] = xv[i];
      std::vector<double> qx = basis.residual_direction(col);
      const bool has_qx = !qx.empty();
      double gain_lin = 0.0;
      if (has_qx) {
        double g1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) g1 += qx[i] * resid[i];
        gain_lin = g1 * g1;
        for (std::size_t i = 0; i < n; ++i) rtil[i] = resid[i] - g1 * qx[i];
      } else {
        std::copy(resid.begin(), resid.end(), rtil.begin());
      }

      const std::size_t m_ext = basis.size() + (has_qx ? 1 : 0);
      a0.assign(m_ext, 0.0);
      a1.assign(m_ext, 0.0);
      qrow.resize(m_ext);
      double cnt = 0.0, sx = 0.0, sxx = 0.0, sr = 0.0, sxr = 0.0;
      double n00 = 0.0, n01 = 0.0, n11 = 0.0;

      const std::vector<std::int32_t>& ord = order[j];
      std::size_t pos = 0;
      while (pos < n) {
        // Enter the group of rows sharing the current (largest remaining) value.
        const double group_val = xv[ord[pos]];
        while (pos < n && xv[ord[pos]] == group_val) {
          const std::size_t row = static_cast<std::size_t>(ord[pos]);
          for (std::size_t m = 0; m < basis.size(); ++m) qrow[m] = basis.q[m][row];
          if (has_qx) qrow[m_ext - 1] = qx[row];
          const double xr = xv[row];
          double a0q = 0.0, a1q = 0.0, qq = 0.0;
          for (std::size_t m = 0; m < m_ext; ++m) {
            a0q += a0[m] * qrow[m];
            a1q += a1[m] * qrow[m];
            qq += qrow[m] * qrow[m];
          }
          n00 += 2.0 * a0q + qq;
          n01 += a1q + xr * a0q + xr * qq;
          n11 += 2.0 * xr * a1q + xr * xr * qq;
          for (std::size_t m = 0; m < m_ext; ++m) {
            a0[m] += qrow[m];
            a1[m] += xr * qrow[m];
          }
          cnt += 1.0;
          sx += xr;
          sxx += xr * xr;
          sr += rtil[row];
          sxr += xr * rtil[row];
          ++pos;
        }
        if (pos >= n) break;
        const double t = xv[ord[pos]];  // next distinct value is a candidate knot
        const double uu = sxx - 2.0 * t * sx + t * t * cnt;
        const double ua2 = n11 - 2.0 * t * n01 + t * t * n00;
        const double d = uu - ua2;
        if (d > kDepsRel * std::max(uu, 1e-300)) {
          const double e = sxr - t * sr;
          const double gain = gain_lin + e * e / d;
          if (gain > best_gain) {
            best_gain = gain;
            best_j = j;
            best_knot = t;
            found = true;
          }
        }
      }
    }

    if (!found || best_gain < thresh * tss) break;

    for (const int dir : {+1, -1}) {
      const MarsTerm term{best_j, best_knot, dir};
      const double* xv = x.col(best_j);
      for (std::size_t i = 0; i < n; ++i) col[i] = term.eval(xv[i]);
      std::vector<double> qn = basis.residual_direction(col);
      if (qn.empty()) continue;  // adds nothing to the span
      double proj = 0.0;
      for (std::size_t i = 0; i < n; ++i) proj += qn[i] * resid[i];
      for (std::size_t i = 0; i < n; ++i) resid[i] -= proj * qn[i];
      rss -= proj * proj;
      basis.push(std::move(qn));
      out.terms.push_back(term);
    }
  }
  return out;
}

inline double gcv(double rss, std::size_t n, std::size_t m_terms) {
  // Effective parameters: C(M) = M + penalty * (M - 1) / 2 with penalty 2.
  const double c = 2.0 * static_cast<double>(m_terms) - 1.0;
  const double denom = 1.0 - c / static_cast<double>(n);
  if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
  return rss / (static_cast<double>(n) * denom * denom);
}

}  // namespace mars_detail

class MarsModel final : public Model {
 public:
  MarsModel(double intercept, std::vector<MarsTerm> terms, std::vector<double> coef,
            OutcomeKind kind, std::size_t p, double full_gcv, double pruned_gcv)
      : intercept_(intercept),
        terms_(std::move(terms)),
        coef_(std::move(coef)),
        kind_(kind),
        p_(p),
        full_gcv_(full_gcv),
        pruned_gcv_(pruned_gcv) {}

  std::vector<double> predict(const Matrix& x) const override {
    check_features(x);
    std::vector<double> out(x.rows(), intercept_);
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const MarsTerm& term = terms_[k];
      const double* xv = x.col(term.feature);
      const double c = coef_[k];
      for (std::size_t i = 0; i < x.rows(); ++i) out[i] += c * term.eval(xv[i]);
    }
    if (kind_ == OutcomeKind::Binary)
      for (double& v : out) v = std::clamp(v, 0.0, 1.0);
    return out;
  }

  std::size_t n_features() const override { return p_; }

  const std::vector<MarsTerm>& terms() const { return terms_; }
  const std::vector<double>& coefficients() const { return coef_; }
  double intercept() const { return intercept_; }
  double full_gcv() const { return full_gcv_; }
  double pruned_gcv() const { return pruned_gcv_; }

 private:
  double intercept_;
  std::vector<MarsTerm> terms_;
  std::vector<double> coef_;
  OutcomeKind kind_;
  std::size_t p_;
  double full_gcv_;
  double pruned_gcv_;
};

// Degree-1 additive MARS: forward pass adds hinge pairs at observed knots,
// backward pass deletes terms to minimize GCV. Binary outcomes are fit by
// least squares on {0,1} with predictions clipped to [0,1].
inline MarsModel fit_mars(const Dataset& d, const MarsConfig& cfg = {}) {
  const std::size_t n = d.n_rows(), p = d.n_cols();
  require(n >= 20, "fit_mars: need at least 20 rows");
  const int nk = cfg.nk > 0 ? cfg.nk : mars_max_terms(p);

  const mars_detail::ForwardResult fwd =
      mars_detail::forward_pass(d.x, d.y, nk, cfg.forward_thresh);
  const std::size_t n_terms = fwd.terms.size();

  // Basis matrix: intercept plus hinge terms.
  Matrix b(n, n_terms + 1);
  for (std::size_t i = 0; i < n; ++i) b(i, 0) = 1.0;
  for (std::size_t k = 0; k < n_terms; ++k) {
    const MarsTerm& term = fwd.terms[k];
    const double* xv = d.x.col(term.feature);
    double* dst = b.col(k + 1);
    for (std::size_t i = 0; i < n; ++i) dst[i] = term.eval(xv[i]);
  }

  const std::size_t m_full = n_terms + 1;
  Matrix gram(m_full, m_full);
  std::vector<double> bty(m_full);
  for (std::size_t a = 0; a < m_full; ++a) {
    bty[a] = dot(b.col_span(a), {d.y.data(), n});
    for (std::size_t c = a; c < m_full; ++c) {
      const double v = dot(b.col_span(a), b.col_span(c));
      gram(a, c) = v;
      gram(c, a) = v;
    }
  }
  double yy = 0.0;
  for (double v : d.y) yy += v * v;

  double ridge = 0.0;
  for (std::size_t a = 0; a < m_full; ++a) ridge = std::max(ridge, gram(a, a));
  ridge *= 1e-10;

  // RSS and coefficients for a subset of terms (intercept always kept).
  const auto solve_subset = [&](const std::vector<std::size_t>& subset,
                                std::vector<double>* coef_out) -> double {
    const std::size_t m = subset.size();
    Matrix gs(m, m);
    std::vector<double> hs(m);
    for (std::size_t a = 0; a < m; ++a) {
      hs[a] = bty[subset[a]];
      for (std::size_t c = 0; c < m; ++c) gs(a, c) = gram(subset[a], subset[c]);
      gs(a, a) += ridge;
    }
    require(cholesky_in_place(gs), "mars: singular basis system");
    std::vector<double> beta = hs;
    cholesky_solve(gs, beta);
    double rss = yy;
    for (std::size_t a = 0; a < m; ++a) {
      rss -= 2.0 * beta[a] * hs[a];
      for (std::size_t c = 0; c < m; ++c) rss += beta[a] * gram(subset[a], subset[c]) * beta[c];
    }
    if (coef_out) *coef_out = std::move(beta);
    return std::max(rss, 0.0);
  };

  std::vector<std::size_t> current(m_full);
  std::iota(current.begin(), current.end(), 0);
  double best_gcv = mars_detail::gcv(solve_subset(current, nullptr), n, m_full);
  const double full_gcv = best_gcv;
  std::vector<std::size_t> best_subset = current;

  // Backward pass: repeatedly delete the term whose removal increases RSS
  // least; keep the visited subset with the smallest GCV.
  while (current.size() > 1) {
    double step_rss = std::numeric_limits<double>::infinity();
    std::size_t drop_pos = 0;
    for (std::size_t pos = 1; pos < current.size(); ++pos) {
      std::vector<std::size_t> trial;
      trial.reserve(current.size() - 1);
      for (std::size_t a = 0; a < current.size(); ++a)
        if (a != pos) trial.push_back(current[a]);
      const double rss = solve_subset(trial, nullptr);
      if (rss < step_rss) {
        step_rss = rss;
        drop_pos = pos;
      }
    }
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(drop_pos));
    const double g = mars_detail::gcv(step_rss, n, current.size());
    if (g < best_gcv) {
      best_gcv = g;
      best_subset = current;
    }
  }

  std::vector<double> coef;
  solve_subset(best_subset, &coef);
  std::vector<MarsTerm> kept;
  std::vector<double> kept_coef;
  double intercept = coef[0];
  for (std::size_t a = 1; a < best_subset.size(); ++a) {
    kept.push_back(fwd.terms[best_subset[a] - 1]);
    kept_coef.push_back(coef[a]);
  }
  return MarsModel(intercept, std::move(kept), std::move(kept_coef), d.outcome_kind, p,
                   full_gcv, best_gcv);
}

}  // namespace sl
