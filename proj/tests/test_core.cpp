#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sl/csv.hpp"
#include "sl/dataset.hpp"
#include "sl/folds.hpp"
#include "sl/matrix.hpp"
#include "sl/metrics.hpp"
#include "sl/rng.hpp"
#include "sl/stats.hpp"

using Catch::Approx;

namespace {

// Independent oracle for the t-distribution: two-sided p-value by Simpson
// quadrature of the density, kept free of the incomplete-beta route used by
// the implementation.
double t_two_sided_p_quadrature(double t, double df) {
  const double at = std::fabs(t);
  const double log_norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                          0.5 * std::log(df * 3.14159265358979323846);
  const auto density = [&](double u) {
    return std::exp(log_norm - 0.5 * (df + 1.0) * std::log1p(u * u / df));
  };
  const int steps = 200000;  // even
  const double h = at / steps;
  double sum = density(0.0) + density(at);
  for (int i = 1; i < steps; ++i) sum += density(i * h) * (i % 2 ? 4.0 : 2.0);
  const double integral = sum * h / 3.0;
  return 1.0 - 2.0 * integral;
}

}  // namespace

TEST_CASE("rng is deterministic and forks independent streams") {
  sl::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  sl::Rng base(7);
  sl::Rng f1 = base.fork(1), f2 = base.fork(2);
  REQUIRE(f1.next_u64() != f2.next_u64());
  // fork does not advance the parent
  sl::Rng c(7);
  (void)c.fork(1);
  sl::Rng d(7);
  REQUIRE(c.next_u64() == d.next_u64());
}

TEST_CASE("rng uniform and normal have sane moments") {
  sl::Rng rng(123);
  const int n = 200000;
  double su = 0.0, su2 = 0.0, sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    su2 += u * u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  REQUIRE(su / n == Approx(0.5).margin(0.005));
  REQUIRE(su2 / n == Approx(1.0 / 3.0).margin(0.005));
  REQUIRE(sn / n == Approx(0.0).margin(0.01));
  REQUIRE(sn2 / n == Approx(1.0).margin(0.02));
}

TEST_CASE("rng below is within range and covers values") {
  sl::Rng rng(5);
  std::vector<int> seen(10, 0);
  for (int i = 0; i < 1000; ++i) ++seen[rng.below(10)];
  for (int c : seen) REQUIRE(c > 50);
}

TEST_CASE("fnv1a64 matches reference values") {
  // Standard FNV-1a test vectors.
  REQUIRE(sl::fnv1a64("") == 0xcbf29ce484222325ull);
  REQUIRE(sl::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("cholesky factors and solves") {
  sl::Matrix a(3, 3);
  const double vals[3][3] = {{4, 2, 0.6}, {2, 5, 1.2}, {0.6, 1.2, 3}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = vals[i][j];
  sl::Matrix l = a;
  REQUIRE(sl::cholesky_in_place(l));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= std::min(i, j); ++k) s += l(i, k) * l(j, k);
      REQUIRE(s == Approx(a(i, j)).margin(1e-12));
    }
  std::vector<double> b{1.0, 2.0, 3.0};
  std::vector<double> x = b;
  sl::cholesky_solve(l, x);
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) s += a(i, j) * x[j];
    REQUIRE(s == Approx(b[i]).margin(1e-10));
  }

  sl::Matrix not_pd(2, 2);
  not_pd(0, 0) = 1.0;
  not_pd(0, 1) = not_pd(1, 0) = 2.0;
  not_pd(1, 1) = 1.0;
  REQUIRE_FALSE(sl::cholesky_in_place(not_pd));
}

TEST_CASE("t-test p-value matches quadrature oracle") {
  // r = 0.5, n = 20 -> t = 2.449, p ~ 0.0249
  const double t = 0.5 * std::sqrt(18.0 / 0.75);
  REQUIRE(t == Approx(2.449489742783178));
  const double p = sl::student_t_two_sided_p(t, 18.0);
  REQUIRE(p == Approx(0.024769558804109703).epsilon(1e-10));
  REQUIRE(p == Approx(t_two_sided_p_quadrature(t, 18.0)).epsilon(1e-7));

  for (const auto& [tv, df] : std::vector<std::pair<double, double>>{
           {0.5, 3}, {1.0, 8}, {2.0, 18}, {3.5, 48}, {0.1, 198}}) {
    REQUIRE(sl::student_t_two_sided_p(tv, df) ==
            Approx(t_two_sided_p_quadrature(tv, df)).epsilon(1e-7));
  }
}

TEST_CASE("pearson p-value edge cases") {
  std::vector<double> x(10), y(10);
  sl::Rng rng(1);
  for (std::size_t i = 0; i < 10; ++i) x[i] = y[i] = rng.normal();
  REQUIRE(sl::pearson_cor_test_pvalue(x, y) < 1e-12);

  std::vector<double> c(10, 3.0);
  REQUIRE(sl::pearson_cor_test_pvalue(c, y) == 1.0);
}

TEST_CASE("pearson p-values are uniform under the null") {
  sl::Rng rng(99);
  const int reps = 500, n = 1000;
  std::vector<double> pvals(reps);
  std::vector<double> x(n), y(n);
  for (int r = 0; r < reps; ++r) {
    for (int i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = rng.normal();
    }
    pvals[r] = sl::pearson_cor_test_pvalue(x, y);
  }
  std::sort(pvals.begin(), pvals.end());
  double ks = 0.0;
  for (int r = 0; r < reps; ++r) {
    const double ecdf_hi = (r + 1.0) / reps, ecdf_lo = r / static_cast<double>(reps);
    ks = std::max(ks, std::max(std::fabs(ecdf_hi - pvals[r]), std::fabs(pvals[r] - ecdf_lo)));
  }
  REQUIRE(ks < 0.08);  // 1.36/sqrt(500) = 0.061 at the 5% level
}

TEST_CASE("midranks handle ties") {
  const std::vector<double> v{1.0, 1.0, 2.0};
  const std::vector<double> r = sl::midranks(v);
  REQUIRE(r[0] == Approx(1.5));
  REQUIRE(r[1] == Approx(1.5));
  REQUIRE(r[2] == Approx(3.0));
}

TEST_CASE("spearman p-value tracks monotone transforms") {
  sl::Rng rng(2);
  std::vector<double> x(30), y(30);
  for (std::size_t i = 0; i < 30; ++i) {
    x[i] = rng.normal();
    y[i] = std::exp(2.0 * x[i]);  // strictly monotone
  }
  REQUIRE(sl::spearman_cor_test_pvalue(x, y) < 1e-12);

  // Already-rank-valued data agrees with pearson.
  std::vector<double> rx(20), ry(20);
  for (std::size_t i = 0; i < 20; ++i) {
    rx[i] = static_cast<double>((i * 7) % 20 + 1);
    ry[i] = static_cast<double>((i * 3) % 20 + 1);
  }
  REQUIRE(sl::spearman_cor_test_pvalue(rx, ry) ==
          Approx(sl::pearson_cor_test_pvalue(rx, ry)).epsilon(1e-12));
}

TEST_CASE("standardize_columns centers and scales") {
  sl::Matrix x(3, 1);
  x(0, 0) = 1.0;
  x(1, 0) = 2.0;
  x(2, 0) = 3.0;
  auto [z, scaler] = sl::standardize_columns(x);
  REQUIRE(z(0, 0) == Approx(-1.0));
  REQUIRE(z(1, 0) == Approx(0.0).margin(1e-15));
  REQUIRE(z(2, 0) == Approx(1.0));
  REQUIRE(scaler.means[0] == Approx(2.0));
  REQUIRE(scaler.sds[0] == Approx(1.0));

  // idempotence on standardized input
  auto [z2, scaler2] = sl::standardize_columns(z);
  for (int i = 0; i < 3; ++i) REQUIRE(z2(i, 0) == Approx(z(i, 0)).margin(1e-10));

  // round trip
  const sl::Matrix back = scaler.invert(z);
  for (int i = 0; i < 3; ++i) REQUIRE(back(i, 0) == Approx(x(i, 0)).epsilon(1e-12));

  sl::Matrix constant(3, 1, 5.0);
  REQUIRE_THROWS_AS(sl::standardize_columns(constant), sl::Error);
}

TEST_CASE("standardize then invert is identity on random data") {
  sl::Rng rng(11);
  sl::Matrix x(50, 4);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 50; ++i) x(i, j) = 3.0 * rng.normal() + j;
  auto [z, scaler] = sl::standardize_columns(x);
  for (std::size_t j = 0; j < 4; ++j) {
    REQUIRE(sl::mean(z.col_span(j)) == Approx(0.0).margin(1e-10));
    REQUIRE(sl::sample_sd(z.col_span(j)) == Approx(1.0).margin(1e-10));
  }
  const sl::Matrix back = scaler.invert(z);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 50; ++i)
      REQUIRE(back(i, j) == Approx(x(i, j)).epsilon(1e-12).margin(1e-12));
}

TEST_CASE("subset_columns keeps order and validates") {
  sl::Matrix x(2, 3);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 2; ++i) x(i, j) = 10.0 * static_cast<double>(j) + i;
  const sl::Dataset d = sl::make_dataset(x, {0.0, 1.0}, sl::OutcomeKind::Continuous);

  const sl::Dataset sub = sl::subset_columns(d, sl::make_feature_subset({0, 2}, 3));
  REQUIRE(sub.n_cols() == 2);
  REQUIRE(sub.x(0, 0) == 0.0);
  REQUIRE(sub.x(0, 1) == 20.0);
  REQUIRE(sub.y == d.y);

  const sl::Dataset all = sl::subset_columns(d, sl::all_features(3));
  REQUIRE(all.x == d.x);

  REQUIRE_THROWS_AS(sl::make_feature_subset({5}, 3), sl::Error);
  REQUIRE_THROWS_AS(sl::make_feature_subset({}, 3), sl::Error);
}

TEST_CASE("dataset invariants") {
  sl::Matrix x(2, 1);
  REQUIRE_THROWS_AS(sl::make_dataset(x, {0.5, 1.0}, sl::OutcomeKind::Binary), sl::Error);
  REQUIRE_THROWS_AS(sl::make_dataset(x, {0.0}, sl::OutcomeKind::Continuous), sl::Error);
  x(0, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(sl::make_dataset(x, {0.0, 1.0}, sl::OutcomeKind::Continuous), sl::Error);
}

TEST_CASE("csv load, errors and round trip") {
  const std::string dir = std::filesystem::temp_directory_path() / "slkit_csv_test";
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/basic.csv";
  {
    std::ofstream out(path);
    out << "a,b,y\n1,2,3\n4,5,6\n7,8,9\n";
  }
  const sl::Dataset d = sl::load_csv(path, "y", sl::OutcomeKind::Continuous);
  REQUIRE(d.n_rows() == 3);
  REQUIRE(d.n_cols() == 2);
  REQUIRE(d.x(1, 1) == 5.0);
  REQUIRE(d.y == std::vector<double>{3.0, 6.0, 9.0});

  // binary outcome with a non-0/1 value names the offending row
  const std::string bad = dir + "/bad.csv";
  {
    std::ofstream out(bad);
    out << "a,y\n1,0\n2,0.5\n";
  }
  REQUIRE_THROWS_WITH(sl::load_csv(bad, "y", sl::OutcomeKind::Binary),
                      Catch::Matchers::ContainsSubstring("row 2"));

  const std::string nonnum = dir + "/nonnum.csv";
  {
    std::ofstream out(nonnum);
    out << "a,y\n1,2\nfoo,3\n";
  }
  REQUIRE_THROWS_WITH(sl::load_csv(nonnum, "y", sl::OutcomeKind::Continuous),
                      Catch::Matchers::ContainsSubstring("column 'a'"));

  REQUIRE_THROWS_AS(sl::load_csv(dir + "/missing.csv", "y", sl::OutcomeKind::Continuous),
                    sl::Error);
  REQUIRE_THROWS_AS(sl::load_csv(path, "zz", sl::OutcomeKind::Continuous), sl::Error);

  // numeric round trip through write_csv / load_csv
  sl::Rng rng(3);
  sl::Matrix xr(20, 3);
  std::vector<double> yr(20);
  for (std::size_t i = 0; i < 20; ++i) {
    yr[i] = rng.normal() * 1e-3;
    for (std::size_t j = 0; j < 3; ++j) xr(i, j) = rng.normal() * std::pow(10.0, double(j) - 1);
  }
  const sl::Dataset orig = sl::make_dataset(xr, yr, sl::OutcomeKind::Continuous);
  const std::string rt = dir + "/rt.csv";
  sl::write_csv(rt, orig);
  const sl::Dataset loaded = sl::load_csv(rt, "y", sl::OutcomeKind::Continuous);
  REQUIRE(loaded.n_rows() == orig.n_rows());
  for (std::size_t i = 0; i < 20; ++i) {
    REQUIRE(loaded.y[i] == Approx(orig.y[i]).epsilon(1e-12));
    for (std::size_t j = 0; j < 3; ++j)
      REQUIRE(loaded.x(i, j) == Approx(orig.x(i, j)).epsilon(1e-12));
  }
}

TEST_CASE("csv fuzz: random numeric tables load without error") {
  const std::string dir = std::filesystem::temp_directory_path() / "slkit_csv_fuzz";
  std::filesystem::create_directories(dir);
  sl::Rng rng(77);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + rng.below(30), p = 1 + rng.below(6);
    sl::Matrix x(n, p);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.normal() * std::exp(rng.normal() * 3.0);
      for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.normal() * std::exp(rng.normal() * 3.0);
    }
    const std::string path = dir + "/fuzz" + std::to_string(t) + ".csv";
    sl::write_csv(path, sl::make_dataset(x, y, sl::OutcomeKind::Continuous));
    const sl::Dataset back = sl::load_csv(path, "y", sl::OutcomeKind::Continuous);
    REQUIRE(back.n_rows() == n);
    REQUIRE(back.n_cols() == p);
  }
}

TEST_CASE("make_folds balances fold sizes") {
  const sl::FoldAssignment f = sl::make_folds(10, 5, nullptr, sl::Rng(1));
  for (int v = 0; v < 5; ++v) REQUIRE(f.rows_in_fold(v).size() == 2);

  const sl::FoldAssignment g = sl::make_folds(11, 5, nullptr, sl::Rng(2));
  std::vector<std::size_t> sizes;
  for (int v = 0; v < 5; ++v) sizes.push_back(g.rows_in_fold(v).size());
  std::sort(sizes.begin(), sizes.end());
  REQUIRE(sizes == std::vector<std::size_t>{2, 2, 2, 2, 3});
}

TEST_CASE("make_folds stratifies classes exactly") {
  std::vector<double> labels(100, 0.0);
  for (int i = 0; i < 20; ++i) labels[static_cast<std::size_t>(i * 5)] = 1.0;
  const sl::FoldAssignment f = sl::make_folds(100, 5, &labels, sl::Rng(3));
  for (int v = 0; v < 5; ++v) {
    int pos = 0, neg = 0;
    for (std::size_t i : f.rows_in_fold(v)) (labels[i] == 1.0 ? pos : neg)++;
    REQUIRE(pos == 4);
    REQUIRE(neg == 16);
  }

  std::vector<double> rare(20, 0.0);
  rare[0] = rare[1] = 1.0;  // class smaller than V
  REQUIRE_THROWS_AS(sl::make_folds(20, 5, &rare, sl::Rng(4)), sl::Error);
  REQUIRE_THROWS_AS(sl::make_folds(3, 5, nullptr, sl::Rng(5)), sl::Error);
}

TEST_CASE("r_squared hand values") {
  const std::vector<double> y{0.0, 1.0, 2.0};
  REQUIRE(sl::r_squared(std::vector<double>{1.0, 1.0, 1.0}, y) == Approx(0.0));
  REQUIRE(sl::r_squared(y, y) == Approx(1.0));
  REQUIRE(sl::r_squared(std::vector<double>{0.0, 0.0, 0.0}, y) == Approx(-1.5));
  REQUIRE_THROWS_AS(sl::r_squared(y, std::vector<double>{1.0, 1.0, 1.0}), sl::Error);
}

TEST_CASE("auc hand values and invariances") {
  const std::vector<double> y{0.0, 0.0, 1.0, 1.0};
  REQUIRE(sl::auc(std::vector<double>{0.1, 0.8, 0.6, 0.9}, y) == Approx(0.75));
  REQUIRE(sl::auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y) == Approx(1.0));
  REQUIRE(sl::auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y) == Approx(0.5));
  REQUIRE_THROWS_AS(sl::auc(std::vector<double>{0.1, 0.2, 0.3, 0.4},
                            std::vector<double>{1.0, 1.0, 1.0, 1.0}),
                    sl::Error);

  // invariant under strictly increasing transforms; complement under label flip
  sl::Rng rng(8);
  std::vector<double> pred(50), yy(50), mono(50), flip(50);
  for (std::size_t i = 0; i < 50; ++i) {
    pred[i] = rng.uniform();
    yy[i] = rng.bernoulli(pred[i]) ? 1.0 : 0.0;
    mono[i] = std::exp(3.0 * pred[i]) + 1.0;
    flip[i] = 1.0 - yy[i];
  }
  if (std::count(yy.begin(), yy.end(), 1.0) > 0 && std::count(yy.begin(), yy.end(), 0.0) > 0) {
    REQUIRE(sl::auc(pred, yy) == Approx(sl::auc(mono, yy)).epsilon(1e-12));
    REQUIRE(sl::auc(pred, yy) == Approx(1.0 - sl::auc(pred, flip)).epsilon(1e-12));
  }
}
