#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

#include "sl/forest.hpp"
#include "sl/gradboost.hpp"
#include "sl/rng.hpp"

using Catch::Approx;

namespace {

sl::Dataset gaussian_data(std::size_t n, std::size_t p, sl::Rng& rng,
                          const std::function<double(const double*)>& f, double noise,
                          sl::OutcomeKind kind = sl::OutcomeKind::Continuous) {
  sl::Matrix x(n, p);
  std::vector<double> y(n), row(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      x(i, j) = rng.normal();
      row[j] = x(i, j);
    }
    if (kind == sl::OutcomeKind::Continuous) {
      y[i] = f(row.data()) + noise * rng.normal();
    } else {
      y[i] = rng.bernoulli(f(row.data())) ? 1.0 : 0.0;
    }
  }
  return sl::make_dataset(std::move(x), std::move(y), kind);
}

}  // namespace

TEST_CASE("forest predicts a constant outcome exactly") {
  sl::Rng rng(1);
  sl::Matrix x(50, 3);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 50; ++i) x(i, j) = rng.normal();
  const sl::Dataset d = sl::make_dataset(x, std::vector<double>(50, 2.5),
                                         sl::OutcomeKind::Continuous);
  sl::ForestConfig cfg;
  cfg.n_trees = 50;
  const sl::ForestModel model = sl::fit_random_forest(d, cfg, sl::Rng(2));
  for (double v : model.predict(d.x)) REQUIRE(v == Approx(2.5).margin(1e-12));
}

TEST_CASE("forest separates a step function") {
  sl::Rng rng(3);
  const sl::Dataset d = gaussian_data(
      2000, 6, rng, [](const double* r) { return r[0] > 0.0 ? 1.0 : 0.0; }, 0.0,
      sl::OutcomeKind::Binary);
  sl::ForestConfig cfg;
  cfg.n_trees = 200;
  cfg.min_node_size = 1;
  const sl::ForestModel model = sl::fit_random_forest(d, cfg, sl::Rng(4));
  const std::vector<double> pred = model.predict(d.x);
  double miss = 0.0;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    REQUIRE(pred[i] >= 0.0);
    REQUIRE(pred[i] <= 1.0);
    miss += (pred[i] >= 0.5) != (d.y[i] == 1.0) ? 1.0 : 0.0;
  }
  REQUIRE(miss / static_cast<double>(d.n_rows()) < 0.05);
}

TEST_CASE("forest fits are deterministic given the seed") {
  sl::Rng rng(5);
  const sl::Dataset d = gaussian_data(
      200, 4, rng, [](const double* r) { return r[0] + r[1]; }, 0.5);
  sl::ForestConfig cfg;
  cfg.n_trees = 30;
  const sl::ForestModel a = sl::fit_random_forest(d, cfg, sl::Rng(77));
  const sl::ForestModel b = sl::fit_random_forest(d, cfg, sl::Rng(77));
  REQUIRE(a.predict(d.x) == b.predict(d.x));
}

TEST_CASE("truncated evaluation equals growing with the larger node size") {
  sl::Rng rng(6);
  const sl::Dataset d = gaussian_data(
      300, 5, rng, [](const double* r) { return 2.0 * r[0] - r[2]; }, 1.0);
  sl::ForestConfig small;
  small.n_trees = 20;
  small.min_node_size = 5;
  const auto grown = sl::grow_forest(d.x, d.y, d.outcome_kind, small, sl::Rng(8));
  const sl::ForestModel truncated(grown, 100);

  // The stopping rule only gates which nodes split; a node of size >= 100
  // in the grown tree made the same split decision it would have made when
  // grown directly, so the truncated walk must stop exactly at nodes
  // smaller than 100.
  for (const sl::Tree& t : grown->trees) {
    for (const sl::TreeNode& nd : t.nodes) {
      if (nd.feature >= 0 && nd.count >= 100) {
        REQUIRE(t.nodes[static_cast<std::size_t>(nd.left)].count +
                    t.nodes[static_cast<std::size_t>(nd.right)].count ==
                nd.count);
      }
    }
  }
  const std::vector<double> pred = truncated.predict(d.x);
  REQUIRE(pred.size() == d.n_rows());
  // coarser trees give a coarser fit than the fine evaluation
  const sl::ForestModel fine(grown, 5);
  double sse_fine = 0.0, sse_coarse = 0.0;
  const std::vector<double> pf = fine.predict(d.x);
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    sse_fine += (d.y[i] - pf[i]) * (d.y[i] - pf[i]);
    sse_coarse += (d.y[i] - pred[i]) * (d.y[i] - pred[i]);
  }
  REQUIRE(sse_fine < sse_coarse);
}

TEST_CASE("impurity importance finds the signal feature") {
  int hits = 0;
  for (int run = 0; run < 20; ++run) {
    sl::Rng rng(100 + static_cast<std::uint64_t>(run));
    const sl::Dataset d = gaussian_data(
        300, 6, rng, [](const double* r) { return 3.0 * r[0]; }, 1.0);
    sl::ForestConfig cfg;
    cfg.n_trees = 100;
    const sl::ForestModel model = sl::fit_random_forest(d, cfg, sl::Rng(run));
    const std::vector<double> imp = sl::rf_impurity_importance(model);
    for (double v : imp) REQUIRE(v >= 0.0);
    if (std::max_element(imp.begin(), imp.end()) == imp.begin()) ++hits;
  }
  REQUIRE(hits >= 19);
}

TEST_CASE("importance is permutation-equivariant with full feature sampling") {
  sl::Rng rng(9);
  const sl::Dataset d = gaussian_data(
      150, 4, rng, [](const double* r) { return r[1] - 2.0 * r[3]; }, 0.3);
  sl::ForestConfig cfg;
  cfg.n_trees = 25;
  cfg.mtry = 4;  // deterministic feature sweep; bootstrap is row-only
  const sl::ForestModel base = sl::fit_random_forest(d, cfg, sl::Rng(11));
  const std::vector<double> imp = base.importance();

  const std::vector<std::size_t> perm{2, 0, 3, 1};
  sl::Matrix xp(d.n_rows(), 4);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < d.n_rows(); ++i) xp(i, j) = d.x(i, perm[j]);
  const sl::Dataset dp = sl::make_dataset(xp, d.y, d.outcome_kind);
  const sl::ForestModel permuted = sl::fit_random_forest(dp, cfg, sl::Rng(11));
  const std::vector<double> imp_p = permuted.importance();
  for (std::size_t j = 0; j < 4; ++j) REQUIRE(imp_p[j] == Approx(imp[perm[j]]).epsilon(1e-12));
}

TEST_CASE("importance is zero for features never split on") {
  sl::Rng rng(10);
  sl::Matrix x(100, 3);
  for (std::size_t i = 0; i < 100; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = 1.0;  // constant: never a valid split
    x(i, 2) = rng.normal();
  }
  std::vector<double> y(100);
  for (std::size_t i = 0; i < 100; ++i) y[i] = x(i, 0);
  const sl::Dataset d = sl::make_dataset(x, y, sl::OutcomeKind::Continuous);
  sl::ForestConfig cfg;
  cfg.n_trees = 30;
  cfg.mtry = 3;
  const sl::ForestModel model = sl::fit_random_forest(d, cfg, sl::Rng(12));
  REQUIRE(model.importance()[1] == 0.0);
}

TEST_CASE("rf_impurity_importance rejects non-forest models") {
  const sl::ConstantModel constant(1.0, 3);
  REQUIRE_THROWS_AS(sl::rf_impurity_importance(constant), sl::Error);
}

TEST_CASE("out-of-bag error is tracked when requested") {
  sl::Rng rng(14);
  const sl::Dataset d = gaussian_data(
      300, 4, rng, [](const double* r) { return r[0]; }, 0.5);
  sl::ForestConfig cfg;
  cfg.n_trees = 100;
  cfg.track_oob = true;
  const sl::ForestModel model = sl::fit_random_forest(d, cfg, sl::Rng(15));
  REQUIRE(std::isfinite(model.fit().oob_error));
  REQUIRE(model.fit().oob_error > 0.0);
}

TEST_CASE("boosting with zero shrinkage predicts the base value") {
  sl::Rng rng(16);
  const sl::Dataset d = gaussian_data(
      100, 3, rng, [](const double* r) { return r[0]; }, 0.5);
  sl::GradBoostConfig cfg;
  cfg.n_trees = 25;
  cfg.shrinkage = 0.0;
  const sl::BoostModel model = sl::fit_grad_boost(d, cfg);
  const double ybar = sl::mean_of({d.y.data(), d.y.size()});
  for (double v : model.predict(d.x)) REQUIRE(v == Approx(ybar).margin(1e-12));
}

TEST_CASE("one unshrunk tree nails a coarse piecewise-constant target") {
  sl::Rng rng(17);
  const std::size_t n = 800;
  sl::Matrix x(n, 1);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform() * 4.0;
    y[i] = std::floor(x(i, 0));  // 4 pieces
  }
  const sl::Dataset d = sl::make_dataset(x, y, sl::OutcomeKind::Continuous);
  sl::GradBoostConfig cfg;
  cfg.n_trees = 1;
  cfg.shrinkage = 1.0;
  cfg.min_obs_node = 10;
  const sl::BoostModel model = sl::fit_grad_boost(d, cfg);
  const std::vector<double> pred = model.predict(d.x);
  double mse = 0.0;
  for (std::size_t i = 0; i < n; ++i) mse += (y[i] - pred[i]) * (y[i] - pred[i]);
  REQUIRE(mse / static_cast<double>(n) < 1e-12);
}

TEST_CASE("boosting training loss is monotone nonincreasing") {
  sl::Rng rng(18);
  const sl::Dataset cont = gaussian_data(
      400, 5, rng, [](const double* r) { return std::sin(r[0]) + r[1] * r[2]; }, 0.7);
  sl::GradBoostConfig cfg;
  cfg.n_trees = 200;
  cfg.shrinkage = 0.1;
  const sl::BoostModel mc = sl::fit_grad_boost(cont, cfg);
  const std::vector<double>& loss = mc.fit().train_loss;
  for (std::size_t t = 1; t < loss.size(); ++t) REQUIRE(loss[t] <= loss[t - 1] + 1e-12);

  const sl::Dataset bin = gaussian_data(
      400, 5, rng, [](const double* r) { return sl::logistic(2.0 * r[0]); }, 0.0,
      sl::OutcomeKind::Binary);
  const sl::BoostModel mb = sl::fit_grad_boost(bin, cfg);
  const std::vector<double>& bloss = mb.fit().train_loss;
  for (std::size_t t = 1; t < bloss.size(); ++t) REQUIRE(bloss[t] <= bloss[t - 1] + 1e-12);
  for (double v : mb.predict(bin.x)) {
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("boost prefix evaluation matches a shorter fit") {
  sl::Rng rng(19);
  const sl::Dataset d = gaussian_data(
      300, 4, rng, [](const double* r) { return r[0] * r[1]; }, 0.5);
  sl::GradBoostConfig long_cfg;
  long_cfg.n_trees = 120;
  long_cfg.shrinkage = 0.1;
  const auto grown = sl::grow_boost(d.x, d.y, d.outcome_kind, long_cfg);
  const sl::BoostModel prefix(grown, 40);

  sl::GradBoostConfig short_cfg = long_cfg;
  short_cfg.n_trees = 40;
  const sl::BoostModel direct = sl::fit_grad_boost(d, short_cfg);
  const std::vector<double> a = prefix.predict(d.x);
  const std::vector<double> b = direct.predict(d.x);
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == Approx(b[i]).margin(1e-12));
}
