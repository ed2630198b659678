#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sl/common.hpp"
#include "sl/dataset.hpp"
#include "sl/matrix.hpp"
#include "sl/rng.hpp"
#include "sl/stats.hpp"

namespace sl {

enum class Relationship { Linear, Nonlinear };
enum class Strength { Weak, Strong };
enum class Correlation { Uncorrelated, Correlated };

inline std::string to_string(Relationship r) {
  return r == Relationship::Linear ? "linear" : "nonlinear";
}
inline std::string to_string(Strength s) { return s == Strength::Weak ? "weak" : "strong"; }
inline std::string to_string(Correlation c) {
  return c == Correlation::Uncorrelated ? "uncorrelated" : "correlated";
}

// One cell of the simulation design.
struct ScenarioConfig {
  std::size_t n = 0;
  std::size_t p = 0;
  Relationship relationship = Relationship::Linear;
  Strength strength = Strength::Strong;
  Correlation correlation = Correlation::Uncorrelated;
  OutcomeKind outcome_kind = OutcomeKind::Continuous;
  std::uint64_t seed = 0;

  // Canonical key for seed derivation and result records.
  std::string canonical() const {
    return "n=" + std::to_string(n) + ";p=" + std::to_string(p) +
           ";rel=" + to_string(relationship) + ";strength=" + to_string(strength) +
           ";corr=" + to_string(correlation) + ";outcome=" + to_string(outcome_kind);
  }
};

inline void validate(const ScenarioConfig& c) {
  require(c.p >= 6, "scenario: p must be at least 6");
  require(c.n >= 2, "scenario: n must be at least 2");
}

// True coefficient vector; only the first six entries may be nonzero.
struct BetaVector {
  std::vector<double> values;
};

inline BetaVector build_beta(Strength strength, std::size_t p) {
  require(p >= 6, "build_beta: p must be at least 6");
  BetaVector beta;
  beta.values.assign(p, 0.0);
  if (strength == Strength::Weak) {
    beta.values[1] = 1.0;
    beta.values[5] = 1.0;
  } else {
    beta.values[0] = -3.0;
    beta.values[1] = -1.0;
    beta.values[2] = 1.0;
    beta.values[3] = -1.5;
    beta.values[4] = -0.5;
    beta.values[5] = 0.5;
  }
  return beta;
}

// Covariance of the covariate law plus its lower Cholesky factor.
struct CovarianceSpec {
  Matrix sigma;
  Matrix cholesky_factor;  // lower triangular
  bool identity = false;
};

// Uncorrelated: identity. Correlated: unit diagonal, 0.9 (strong) or 0.95
// (weak) between pairs of active covariates (those with nonzero beta), 0.3
// for every other distinct pair. Fails loudly if not positive definite.
inline CovarianceSpec build_sigma(const ScenarioConfig& config) {
  validate(config);
  const std::size_t p = config.p;
  CovarianceSpec spec;
  spec.sigma = Matrix(p, p);
  for (std::size_t j = 0; j < p; ++j) spec.sigma(j, j) = 1.0;

  if (config.correlation == Correlation::Uncorrelated) {
    spec.cholesky_factor = spec.sigma;
    spec.identity = true;
    return spec;
  }

  const BetaVector beta = build_beta(config.strength, p);
  std::vector<bool> active(p, false);
  for (std::size_t j = 0; j < p; ++j) active[j] = beta.values[j] != 0.0;
  const double rho_active = config.strength == Strength::Strong ? 0.9 : 0.95;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      if (i == j) continue;
      spec.sigma(i, j) = (active[i] && active[j]) ? rho_active : 0.3;
    }

  Matrix chol = spec.sigma;
  require(cholesky_in_place(chol), "build_sigma: covariance matrix is not positive definite");
  // Zero the untouched upper triangle so the factor is plain lower.
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) chol(i, j) = 0.0;
  spec.cholesky_factor = std::move(chol);
  return spec;
}

// n x p draw from N(0, sigma); row i = L z_i with z_i iid standard normal.
// Draw order (row-major z) is part of the reproducibility contract.
inline Matrix sample_covariates(const CovarianceSpec& spec, std::size_t n, Rng& rng) {
  const std::size_t p = spec.sigma.rows();
  Matrix x(n, p);
  std::vector<double> z(p);
  const Matrix& l = spec.cholesky_factor;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) z[j] = rng.normal();
    if (spec.identity) {
      for (std::size_t j = 0; j < p; ++j) x(i, j) = z[j];
    } else {
      for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k <= j; ++k) s += l(j, k) * z[k];
        x(i, j) = s;
      }
    }
  }
  return x;
}

// f(x): linear is x'beta; nonlinear combines sin, product, identity and cos
// terms of the first six covariates.
inline double regression_function(std::span<const double> x, const BetaVector& beta,
                                  Relationship relationship) {
  require(x.size() >= 6, "regression_function: need at least 6 covariates");
  require(beta.values.size() <= x.size(), "regression_function: beta longer than x");
  if (relationship == Relationship::Linear) {
    double s = 0.0;
    for (std::size_t j = 0; j < beta.values.size(); ++j) s += x[j] * beta.values[j];
    return s;
  }
  constexpr double kQuarterPi = 0.78539816339744830961566084581988;
  const std::vector<double>& b = beta.values;
  return b[0] * std::sin(kQuarterPi * x[0]) + b[1] * x[1] * x[2] + b[2] * x[2] +
         b[3] * std::cos(kQuarterPi * x[3]) + b[4] * x[4] * x[0] + b[5] * x[5];
}

namespace detail {

struct GeneratedData {
  Dataset data;
  std::vector<double> true_f;
};

// Core generator shared by training draws and oracle test sets: covariates
// first (row-major), then one outcome draw per row.
inline GeneratedData generate_with_beta(const ScenarioConfig& config, const BetaVector& beta,
                                        std::size_t n, Rng& rng) {
  const CovarianceSpec sigma = build_sigma(config);
  Matrix x = sample_covariates(sigma, n, rng);
  std::vector<double> f(n);
  std::vector<double> row(config.p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < config.p; ++j) row[j] = x(i, j);
    f[i] = regression_function(row, beta, config.relationship);
  }
  std::vector<double> y(n);
  if (config.outcome_kind == OutcomeKind::Continuous) {
    for (std::size_t i = 0; i < n; ++i) y[i] = f[i] + rng.normal();
  } else {
    for (std::size_t i = 0; i < n; ++i) y[i] = rng.bernoulli(normal_cdf(f[i])) ? 1.0 : 0.0;
  }
  return {make_dataset(std::move(x), std::move(y), config.outcome_kind), std::move(f)};
}

}  // namespace detail

// Continuous: y = f(x) + N(0,1). Binary: y ~ Bernoulli(Phi(f(x))), a probit
// model. Deterministic given config.seed.
inline Dataset generate_dataset(const ScenarioConfig& config) {
  validate(config);
  Rng rng(config.seed);
  const BetaVector beta = build_beta(config.strength, config.p);
  return detail::generate_with_beta(config, beta, config.n, rng).data;
}

struct OracleTestSet {
  Dataset data;
  std::vector<double> true_f;  // aligned with data rows
};

// Test draw from the same law plus the true conditional mean values, for
// best-possible (oracle) performance computation.
inline OracleTestSet oracle_test_set(const ScenarioConfig& config, std::size_t n_test) {
  validate(config);
  require(n_test >= 2, "oracle_test_set: n_test must be at least 2");
  Rng rng(config.seed);
  const BetaVector beta = build_beta(config.strength, config.p);
  auto gen = detail::generate_with_beta(config, beta, n_test, rng);
  return {std::move(gen.data), std::move(gen.true_f)};
}

}  // namespace sl
