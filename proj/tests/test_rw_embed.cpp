#include <doctest.h>

#include <cmath>

#include "kmt/errors.hpp"
#include "kmt/rw_embed.hpp"
#include "kmt/stats.hpp"

using namespace kmt;
using namespace kmt::rw;

TEST_CASE("Gaussian bridge is pinned and reproducible") {
  for (long n : {1L, 2L, 17L}) {
    const auto b = sample_bridge(n, 5);
    REQUIRE(b.v.size() == static_cast<std::size_t>(n + 1));
    CHECK(b.v.front() == 0.0);
    CHECK(b.v.back() == 0.0);
    CHECK(sample_bridge(n, 5).v == b.v);
  }
  CHECK_THROWS_AS(sample_bridge(0, 5), InvalidParameter);
}

TEST_CASE("two-step bridge midpoint has variance 1/2") {
  constexpr int reps = 100000;
  std::vector<double> x;
  for (int r = 0; r < reps; ++r) {
    auto rng = CounterRng::derive(99, {static_cast<std::uint64_t>(r)});
    x.push_back(sample_bridge(2, rng).v[1]);
  }
  CHECK(std::abs(stats::variance(x) - 0.5) <= 3 * 0.5 * std::sqrt(2.0 / reps));
}

TEST_CASE("midpoint coupling of hypergeometric and Gaussian") {
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto rng = CounterRng::derive(3, {i});
    const auto d = hypergeo_gauss_couple(2, 0, 1, rng);
    CHECK(d.s == (d.v > 0 ? 1 : -1));
  }
  for (std::uint64_t i = 0; i < 50; ++i) {
    auto rng = CounterRng::derive(4, {i});
    const auto d = hypergeo_gauss_couple(9, 9, 4, rng);
    CHECK(d.s == 4);
    CHECK(d.remainder == doctest::Approx(std::abs(d.v)));
  }
  constexpr int reps = 10000;
  stats::CompensatedSum acc;
  std::vector<double> e;
  for (int i = 0; i < reps; ++i) {
    auto rng = CounterRng::derive(5, {static_cast<std::uint64_t>(i)});
    const auto d = hypergeo_gauss_couple(12, 0, 6, rng);
    CHECK(std::labs(d.s) <= 6);
    CHECK((d.s + 6) % 2 == 0);
    e.push_back(std::exp(0.1 * d.remainder));
  }
  const double m = stats::mean(e), se = std::sqrt(stats::variance(e) / reps);
  CHECK(m <= std::exp(1.0) + 3 * se);
  auto rng = CounterRng::derive(1, {});
  CHECK_THROWS_AS(hypergeo_gauss_couple(12, 1, 6, rng), InvalidParameter);
  CHECK_THROWS_AS(hypergeo_gauss_couple(12, 0, 2, rng), InvalidParameter);
}

TEST_CASE("recursive coupling: forced step, endpoint and increments") {
  const auto one = recursive_couple(1, 1, 8);
  CHECK(one.s == std::vector<long>{0, 1});
  CHECK(one.v == std::vector<double>{0.0, 0.0});
  CHECK(one.t_star == 0.0);
  for (long n : {6L, 13L, 64L, 101L})
    for (long t : {-n, n % 2 == 0 ? 0L : 1L, n - 2})
      for (std::uint64_t r = 0; r < 10; ++r) {
        const auto p = recursive_couple(n, t, 21, r);
        REQUIRE(p.s.size() == static_cast<std::size_t>(n + 1));
        CHECK(p.s.front() == 0);
        CHECK(p.s.back() == t);
        CHECK(p.v.front() == 0.0);
        CHECK(std::abs(p.v.back()) <= 1e-12);
        for (long i = 0; i < n; ++i) CHECK(std::labs(p.s[i + 1] - p.s[i]) == 1);
        CHECK(p.t_star >= 0);
        CHECK(p.pathwise_violations == 0);
      }
  CHECK_THROWS_AS(recursive_couple(4, 1, 1), InvalidParameter);
  CHECK_THROWS_AS(recursive_couple(4, 6, 1), InvalidParameter);
}

TEST_CASE("stitched Gaussian path has bridge covariance") {
  constexpr long n = 8;
  constexpr int reps = 100000;
  std::vector<std::vector<double>> v(n + 1);
  for (int r = 0; r < reps; ++r) {
    const auto p = recursive_couple(n, 0, 77, static_cast<std::uint64_t>(r));
    for (long i = 0; i <= n; ++i) v[i].push_back(p.v[i]);
  }
  for (long i = 1; i < n; ++i)
    for (long j = i; j < n; ++j) {
      std::vector<double> prod;
      for (int r = 0; r < reps; ++r) prod.push_back(v[i][r] * v[j][r]);
      const double cov = stats::mean(prod);
      const double se = std::sqrt(stats::variance(prod) / reps);
      const double target = static_cast<double>(i) * (n - j) / n;
      CHECK(std::abs(cov - target) <= 3 * se);
    }
}

TEST_CASE("induction constants") {
  const auto c = InductionConfig::from(1.0, 0.5, 0.5, 1.0);
  CHECK(c.valid());
  CHECK(c.B == doctest::Approx(4.0));
  CHECK(c.lambda0 == doctest::Approx(0.25));
  auto bad = c;
  bad.A = 3.0;
  CHECK_FALSE(bad.valid());
  bad = c;
  bad.lambda0 = 0.3;
  CHECK_FALSE(bad.valid());
  CHECK(InductionConfig{}.valid());
}

TEST_CASE("bridge experiment at lambda 0 has unit moment generating function") {
  RwConfig cfg;
  cfg.n_list = {16, 32};
  cfg.t_list = {0, 4};
  cfg.lambdas = {0.0, 0.1};
  cfg.reps = 50;
  const auto ex = run_bridge_experiment(cfg);
  REQUIRE(ex.rows.size() == 8);
  for (const auto& r : ex.rows) {
    if (r.lambda == 0.0) CHECK(r.mgf == 1.0);
    CHECK(r.mgf <= r.rhs);
  }
  CHECK(ex.pathwise_violations == 0);
  cfg.lambdas = {0.5};
  CHECK_THROWS_AS(run_bridge_experiment(cfg), InvalidParameter);
}

TEST_CASE("full experiment is reproducible") {
  RwConfig cfg;
  cfg.n_list = {64, 128};
  cfg.reps = 30;
  cfg.seed = 12;
  const auto a = run_full_experiment(cfg);
  const auto b = run_full_experiment(cfg);
  CHECK(a.max_dev == b.max_dev);
  CHECK(a.pathwise_violations == 0);
  for (const auto& d : a.max_dev)
    for (double x : d) CHECK(x >= 0);
}
