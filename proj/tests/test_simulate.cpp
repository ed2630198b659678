#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sl/metrics.hpp"
#include "sl/simulate.hpp"

using Catch::Approx;

namespace {

sl::ScenarioConfig cfg(std::size_t n, std::size_t p, sl::Relationship rel, sl::Strength s,
                       sl::Correlation c, sl::OutcomeKind o, std::uint64_t seed) {
  return {n, p, rel, s, c, o, seed};
}

}  // namespace

TEST_CASE("build_beta produces the exact coefficient vectors") {
  const sl::BetaVector weak = sl::build_beta(sl::Strength::Weak, 10);
  REQUIRE(weak.values == std::vector<double>{0, 1, 0, 0, 0, 1, 0, 0, 0, 0});

  const sl::BetaVector strong = sl::build_beta(sl::Strength::Strong, 6);
  REQUIRE(strong.values == std::vector<double>{-3, -1, 1, -1.5, -0.5, 0.5});

  const sl::BetaVector weak6 = sl::build_beta(sl::Strength::Weak, 6);
  for (std::size_t j = 0; j < 6; ++j)
    REQUIRE((weak6.values[j] != 0.0) == (j == 1 || j == 5));

  REQUIRE_THROWS_AS(sl::build_beta(sl::Strength::Weak, 5), sl::Error);
}

TEST_CASE("build_sigma block structure") {
  const auto base = cfg(100, 10, sl::Relationship::Linear, sl::Strength::Strong,
                        sl::Correlation::Uncorrelated, sl::OutcomeKind::Continuous, 1);
  const sl::CovarianceSpec ident = sl::build_sigma(base);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j)
      REQUIRE(ident.sigma(i, j) == (i == j ? 1.0 : 0.0));

  auto corr = base;
  corr.correlation = sl::Correlation::Correlated;
  const sl::CovarianceSpec strong = sl::build_sigma(corr);
  REQUIRE(strong.sigma(0, 1) == 0.9);   // both active
  REQUIRE(strong.sigma(0, 6) == 0.3);   // active-inactive
  REQUIRE(strong.sigma(6, 7) == 0.3);   // inactive-inactive
  for (std::size_t i = 0; i < 10; ++i) REQUIRE(strong.sigma(i, i) == 1.0);

  auto weak = corr;
  weak.strength = sl::Strength::Weak;
  const sl::CovarianceSpec ws = sl::build_sigma(weak);
  REQUIRE(ws.sigma(1, 5) == 0.95);  // active set {2,6} 1-based
  REQUIRE(ws.sigma(0, 1) == 0.3);

  // Cholesky reconstructs sigma
  for (const auto& spec : {strong, ws}) {
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = 0; j < 10; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < 10; ++k)
          s += spec.cholesky_factor(i, k) * spec.cholesky_factor(j, k);
        REQUIRE(s == Approx(spec.sigma(i, j)).margin(1e-10));
      }
  }
}

TEST_CASE("sample_covariates matches its law") {
  const auto base = cfg(2, 6, sl::Relationship::Linear, sl::Strength::Strong,
                        sl::Correlation::Uncorrelated, sl::OutcomeKind::Continuous, 1);
  const sl::CovarianceSpec ident = sl::build_sigma(base);
  sl::Rng rng(11);
  const std::size_t n = 100000;
  const sl::Matrix x = sl::sample_covariates(ident, n, rng);
  for (std::size_t j = 0; j < 6; ++j) {
    REQUIRE(sl::mean(x.col_span(j)) == Approx(0.0).margin(0.02));
    REQUIRE(sl::sample_sd(x.col_span(j)) == Approx(1.0).margin(0.02));
  }

  auto corr = base;
  corr.correlation = sl::Correlation::Correlated;
  const sl::CovarianceSpec spec = sl::build_sigma(corr);
  sl::Rng rng2(12);
  const sl::Matrix xc = sl::sample_covariates(spec, n, rng2);
  REQUIRE(sl::pearson_cor(xc.col_span(0), xc.col_span(1)) == Approx(0.9).margin(0.01));

  // single row, deterministic under fixed seed
  sl::Rng ra(5), rb(5);
  const sl::Matrix one_a = sl::sample_covariates(ident, 1, ra);
  const sl::Matrix one_b = sl::sample_covariates(ident, 1, rb);
  REQUIRE(one_a == one_b);
  REQUIRE(one_a.rows() == 1);
}

TEST_CASE("regression_function values") {
  const sl::BetaVector strong = sl::build_beta(sl::Strength::Strong, 6);
  std::vector<double> e1(6, 0.0);
  e1[0] = 1.0;
  REQUIRE(sl::regression_function(e1, strong, sl::Relationship::Linear) == Approx(-3.0));

  const std::vector<double> zero(6, 0.0);
  REQUIRE(sl::regression_function(zero, strong, sl::Relationship::Nonlinear) == Approx(-1.5));

  const sl::BetaVector weak = sl::build_beta(sl::Strength::Weak, 6);
  REQUIRE(sl::regression_function(zero, weak, sl::Relationship::Nonlinear) == Approx(0.0));

  // spot check the full nonlinear form
  const std::vector<double> x{0.3, -1.2, 0.7, 2.0, -0.4, 1.1};
  const double pi4 = 0.25 * 3.14159265358979323846;
  const double expected = -3.0 * std::sin(pi4 * 0.3) + (-1.0) * (-1.2 * 0.7) + 1.0 * 0.7 +
                          (-1.5) * std::cos(pi4 * 2.0) + (-0.5) * (-0.4 * 0.3) + 0.5 * 1.1;
  REQUIRE(sl::regression_function(x, strong, sl::Relationship::Nonlinear) == Approx(expected));
}

TEST_CASE("generate_dataset determinism and outcome laws") {
  const auto c = cfg(500, 8, sl::Relationship::Linear, sl::Strength::Strong,
                     sl::Correlation::Correlated, sl::OutcomeKind::Continuous, 314);
  const sl::Dataset a = sl::generate_dataset(c);
  const sl::Dataset b = sl::generate_dataset(c);
  REQUIRE(a.x == b.x);
  REQUIRE(a.y == b.y);

  auto cb = c;
  cb.outcome_kind = sl::OutcomeKind::Binary;
  const sl::Dataset bin = sl::generate_dataset(cb);
  for (double v : bin.y) REQUIRE((v == 0.0 || v == 1.0));
}

TEST_CASE("binary outcome with zero signal has mean one half") {
  // f == 0: use the core generator with a zero beta vector.
  const auto c = cfg(100000, 6, sl::Relationship::Linear, sl::Strength::Strong,
                     sl::Correlation::Uncorrelated, sl::OutcomeKind::Binary, 2718);
  sl::BetaVector zero;
  zero.values.assign(6, 0.0);
  sl::Rng rng(c.seed);
  const auto gen = sl::detail::generate_with_beta(c, zero, c.n, rng);
  REQUIRE(sl::mean_of({gen.data.y.data(), gen.data.y.size()}) == Approx(0.5).margin(0.005));
}

TEST_CASE("variance of continuous outcome matches beta'beta + 1") {
  const auto c = cfg(1000000, 6, sl::Relationship::Linear, sl::Strength::Strong,
                     sl::Correlation::Uncorrelated, sl::OutcomeKind::Continuous, 909);
  const sl::Dataset d = sl::generate_dataset(c);
  const double m = sl::mean_of({d.y.data(), d.y.size()});
  double ss = 0.0;
  for (double v : d.y) ss += (v - m) * (v - m);
  const double var = ss / static_cast<double>(d.n_rows() - 1);
  REQUIRE(var == Approx(14.75).margin(0.15));
}

TEST_CASE("oracle_test_set aligns true f with rows") {
  const auto c = cfg(100, 6, sl::Relationship::Linear, sl::Strength::Strong,
                     sl::Correlation::Uncorrelated, sl::OutcomeKind::Continuous, 55);
  const sl::OracleTestSet t = sl::oracle_test_set(c, 1000);
  REQUIRE(t.data.n_rows() == 1000);
  REQUIRE(t.true_f.size() == 1000);
  const sl::BetaVector beta = sl::build_beta(c.strength, c.p);
  std::vector<double> row(c.p);
  for (std::size_t i = 0; i < 50; ++i) {
    double f = 0.0;
    for (std::size_t j = 0; j < c.p; ++j) f += t.data.x(i, j) * beta.values[j];
    REQUIRE(t.true_f[i] == Approx(f).margin(1e-12));
  }
}

TEST_CASE("oracle r-squared approaches the analytic value") {
  // 13.75 / 14.75 at a moderate test size; the 1e6 check runs in acceptance.
  const auto c = cfg(2, 10, sl::Relationship::Linear, sl::Strength::Strong,
                     sl::Correlation::Uncorrelated, sl::OutcomeKind::Continuous, 4242);
  const sl::MetricValue m = sl::oracle_performance(c, 200000);
  REQUIRE(m.name == sl::MetricName::RSquared);
  REQUIRE(m.value == Approx(13.75 / 14.75).margin(0.004));

  auto cw = c;
  cw.strength = sl::Strength::Weak;
  const sl::MetricValue w = sl::oracle_performance(cw, 200000);
  REQUIRE(w.value == Approx(2.0 / 3.0).margin(0.005));
}

TEST_CASE("zero-signal binary oracle auc is one half") {
  const auto c = cfg(2, 6, sl::Relationship::Linear, sl::Strength::Strong,
                     sl::Correlation::Uncorrelated, sl::OutcomeKind::Binary, 777);
  sl::BetaVector zero;
  zero.values.assign(6, 0.0);
  sl::Rng rng(c.seed);
  const auto gen = sl::detail::generate_with_beta(c, zero, 50000, rng);
  std::vector<double> prob(gen.true_f.size());
  for (std::size_t i = 0; i < prob.size(); ++i) prob[i] = sl::normal_cdf(gen.true_f[i]);
  // all scores identical: AUC is exactly 1/2 by the mid-rank convention
  REQUIRE(sl::auc(prob, {gen.data.y.data(), gen.data.y.size()}) == Approx(0.5).margin(0.01));
}

TEST_CASE("scenario validation") {
  REQUIRE_THROWS_AS(sl::generate_dataset(cfg(100, 5, sl::Relationship::Linear,
                                             sl::Strength::Strong, sl::Correlation::Uncorrelated,
                                             sl::OutcomeKind::Continuous, 1)),
                    sl::Error);
  REQUIRE_THROWS_AS(sl::generate_dataset(cfg(1, 6, sl::Relationship::Linear, sl::Strength::Strong,
                                             sl::Correlation::Uncorrelated,
                                             sl::OutcomeKind::Continuous, 1)),
                    sl::Error);
}
