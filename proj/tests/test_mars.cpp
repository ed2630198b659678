#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sl/mars.hpp"
#include "sl/metrics.hpp"
#include "sl/rng.hpp"

using Catch::Approx;

TEST_CASE("nk formula") {
  REQUIRE(sl::mars_max_terms(10) == 21);
  REQUIRE(sl::mars_max_terms(50) == 101);
  REQUIRE(sl::mars_max_terms(500) == 1000);
}

TEST_CASE("mars reproduces an exact linear signal") {
  sl::Rng rng(1);
  const std::size_t n = 200;
  sl::Matrix x(n, 3);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal();
    y[i] = 2.0 * x(i, 0) + 1.0;  // no noise
  }
  const sl::Dataset d = sl::make_dataset(x, y, sl::OutcomeKind::Continuous);
  const sl::MarsModel model = sl::fit_mars(d);
  const std::vector<double> pred = model.predict(d.x);
  REQUIRE(sl::r_squared(pred, {d.y.data(), d.y.size()}) > 0.999);
}

TEST_CASE("mars fits a hinge-shaped signal") {
  sl::Rng rng(2);
  const std::size_t n = 400;
  sl::Matrix x(n, 4);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 4; ++j) x(i, j) = rng.normal();
    y[i] = 3.0 * std::max(0.0, x(i, 1) - 0.4) + 0.05 * rng.normal();
  }
  const sl::Dataset d = sl::make_dataset(x, y, sl::OutcomeKind::Continuous);
  const sl::MarsModel model = sl::fit_mars(d);
  const std::vector<double> pred = model.predict(d.x);
  REQUIRE(sl::r_squared(pred, {d.y.data(), d.y.size()}) > 0.99);
  // at least one retained term sits on the signal feature near the kink
  bool found = false;
  for (const sl::MarsTerm& t : model.terms())
    if (t.feature == 1 && std::fabs(t.knot - 0.4) < 0.3) found = true;
  REQUIRE(found);
}

TEST_CASE("constant outcome gives an intercept-only model") {
  sl::Rng rng(3);
  sl::Matrix x(60, 3);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 60; ++i) x(i, j) = rng.normal();
  const sl::Dataset d = sl::make_dataset(x, std::vector<double>(60, 1.25),
                                         sl::OutcomeKind::Continuous);
  const sl::MarsModel model = sl::fit_mars(d);
  REQUIRE(model.terms().empty());
  REQUIRE(model.intercept() == Approx(1.25));
}

TEST_CASE("pruned GCV never exceeds the full-model GCV") {
  for (int run = 0; run < 5; ++run) {
    sl::Rng rng(10 + static_cast<std::uint64_t>(run));
    const std::size_t n = 150, p = 5;
    sl::Matrix x(n, p);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.normal();
      y[i] = std::sin(x(i, 0)) + 0.5 * x(i, 2) + rng.normal();
    }
    const sl::Dataset d = sl::make_dataset(x, y, sl::OutcomeKind::Continuous);
    const sl::MarsModel model = sl::fit_mars(d);
    REQUIRE(model.pruned_gcv() <= model.full_gcv() + 1e-12);
  }
}

TEST_CASE("binary mars predictions are clipped probabilities") {
  sl::Rng rng(20);
  const std::size_t n = 300;
  sl::Matrix x(n, 3);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal();
    y[i] = rng.bernoulli(sl::normal_cdf(2.0 * x(i, 0))) ? 1.0 : 0.0;
  }
  const sl::Dataset d = sl::make_dataset(x, y, sl::OutcomeKind::Binary);
  const sl::MarsModel model = sl::fit_mars(d);
  const std::vector<double> pred = model.predict(d.x);
  for (double v : pred) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }
  REQUIRE(sl::auc(pred, {d.y.data(), d.y.size()}) > 0.8);
}

TEST_CASE("mars respects the term budget") {
  sl::Rng rng(30);
  const std::size_t n = 500, p = 8;
  sl::Matrix x(n, p);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.normal();
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) s += std::sin(2.0 * x(i, j));
    y[i] = s + 0.2 * rng.normal();
  }
  const sl::Dataset d = sl::make_dataset(x, y, sl::OutcomeKind::Continuous);
  sl::MarsConfig cfg;
  cfg.nk = 11;
  cfg.forward_thresh = 0.0;
  const sl::MarsModel model = sl::fit_mars(d, cfg);
  REQUIRE(model.terms().size() + 1 <= 11);
}

TEST_CASE("mars requires 20 rows") {
  sl::Matrix x(10, 2, 0.0);
  for (std::size_t i = 0; i < 10; ++i) x(i, 0) = static_cast<double>(i);
  const sl::Dataset d =
      sl::make_dataset(x, std::vector<double>(10, 0.0), sl::OutcomeKind::Continuous);
  REQUIRE_THROWS_AS(sl::fit_mars(d), sl::Error);
}
