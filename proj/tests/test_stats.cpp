#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nsk/errors.hpp"
#include "nsk/rng.hpp"
#include "nsk/stats.hpp"

TEST_CASE("mse_vs_target") {
  CHECK(nsk::mse_vs_target({1.0, 3.0}, 2.0) == doctest::Approx(1.0));
  CHECK(nsk::mse_vs_target({5.0}, 5.0) == 0.0);
  CHECK_THROWS_AS(nsk::mse_vs_target({}, 0.0), nsk::input_error);
}

TEST_CASE("loglog_slope recovers exact power laws") {
  std::vector<double> xs{1, 2, 4, 8, 16}, ys;
  for (double x : xs) ys.push_back(3.5 / x);  // slope -1
  auto fit = nsk::loglog_slope(xs, ys);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.5)).epsilon(1e-12));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.r_squared_valid);

  ys.clear();
  for (double x : xs) ys.push_back(0.2 * std::pow(x, 2.5));
  fit = nsk::loglog_slope(xs, ys);
  CHECK(fit.slope == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("loglog_slope input handling") {
  CHECK_THROWS_AS(nsk::loglog_slope({1, 2}, {1}), nsk::input_error);
  CHECK_THROWS_AS(nsk::loglog_slope({1, -2}, {1, 1}), nsk::input_error);
  CHECK_THROWS_AS(nsk::loglog_slope({1}, {1}), nsk::input_error);
  const auto fit = nsk::loglog_slope({1, 2}, {3, 6});
  CHECK(fit.slope == doctest::Approx(1.0));
  CHECK_FALSE(fit.r_squared_valid);
}

TEST_CASE("normal_cdf and normal_quantile are inverse") {
  CHECK(nsk::normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(nsk::normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(nsk::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
  for (double p : {0.001, 0.01, 0.3, 0.5, 0.77, 0.999}) {
    CHECK(nsk::normal_cdf(nsk::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK_THROWS_AS(nsk::normal_quantile(0.0), nsk::input_error);
  CHECK_THROWS_AS(nsk::normal_quantile(1.0), nsk::input_error);
}

TEST_CASE("ks_statistic accepts true-Gaussian samples, rejects shifted ones") {
  nsk::SplitStream s(404);
  std::vector<double> good, bad;
  for (int i = 0; i < 2000; ++i) {
    const double z = s.normal();
    good.push_back(2.0 * z);       // N(0, 4)
    bad.push_back(2.0 * z + 1.5);  // shifted
  }
  const auto ok = nsk::ks_statistic(good, 4.0);
  CHECK(ok.pass);
  CHECK(ok.critical_01 == doctest::Approx(1.628 / std::sqrt(2000.0)));
  const auto nope = nsk::ks_statistic(bad, 4.0);
  CHECK_FALSE(nope.pass);
  CHECK(nope.stat > 0.2);

  CHECK_THROWS_AS(nsk::ks_statistic({1.0, 2.0}, 1.0), nsk::input_error);
}

TEST_CASE("ks_statistic exact on a tiny hand-checked sample") {
  // 20 equally spaced standard-normal quantiles at (i+0.5)/20 give a KS
  // statistic of exactly 0.5/20 = 0.025 against N(0,1).
  std::vector<double> xs;
  for (int i = 0; i < 20; ++i) xs.push_back(nsk::normal_quantile((i + 0.5) / 20.0));
  const auto r = nsk::ks_statistic(xs, 1.0);
  CHECK(r.stat == doctest::Approx(0.025).epsilon(1e-10));
}

TEST_CASE("qq_points are sorted and match theoretical quantiles for ideal data") {
  std::vector<double> xs;
  for (int i = 0; i < 50; ++i) xs.push_back(3.0 * nsk::normal_quantile((i + 0.5) / 50.0));
  std::reverse(xs.begin(), xs.end());
  const auto pts = nsk::qq_points(xs, 9.0);
  REQUIRE(pts.size() == 50);
  for (const auto& [theo, emp] : pts) CHECK(theo == doctest::Approx(emp).epsilon(1e-10));
}

TEST_CASE("wasserstein1_1d: equal-size exact values") {
  CHECK(nsk::wasserstein1_1d({0, 1}, {0, 1}) == 0.0);
  CHECK(nsk::wasserstein1_1d({0, 0}, {1, 1}) == doctest::Approx(1.0));
  CHECK(nsk::wasserstein1_1d({3, 1, 2}, {1, 2, 3}) == 0.0);  // order-free
  CHECK(nsk::wasserstein1_1d({0, 2}, {1, 1}) == doctest::Approx(1.0));
}

TEST_CASE("wasserstein1_1d: translation moves mass linearly") {
  nsk::SplitStream s(6);
  std::vector<double> a, b;
  for (int i = 0; i < 500; ++i) {
    const double z = s.normal();
    a.push_back(z);
    b.push_back(z + 0.75);
  }
  CHECK(nsk::wasserstein1_1d(a, b) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("wasserstein1_1d: unequal sizes degrade gracefully") {
  // Same distribution sampled at different resolutions stays near zero.
  std::vector<double> a, b;
  for (int i = 0; i < 100; ++i) a.push_back(nsk::normal_quantile((i + 0.5) / 100.0));
  for (int i = 0; i < 1000; ++i) b.push_back(nsk::normal_quantile((i + 0.5) / 1000.0));
  CHECK(nsk::wasserstein1_1d(a, b) < 0.02);
  CHECK_THROWS_AS(nsk::wasserstein1_1d({}, {1.0}), nsk::input_error);
}

TEST_CASE("rng: SplitStream children are decorrelated and deterministic") {
  nsk::SplitStream root(123);
  auto a = root.child(0);
  auto b = root.child(1);
  auto a2 = nsk::SplitStream(123).child(0);
  CHECK(a.next_u64() == a2.next_u64());
  CHECK(a.next_u64() != b.next_u64());

  // Crude moment check on the normal generator.
  nsk::SplitStream s(321);
  double m1 = 0, m2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m1 += z;
    m2 += z * z;
  }
  m1 /= n;
  m2 /= n;
  CHECK(std::abs(m1) < 0.01);
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.02));
}
