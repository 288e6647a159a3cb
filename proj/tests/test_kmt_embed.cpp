#include <doctest.h>

#include <cmath>

#include "kmt/errors.hpp"
#include "kmt/exact_dist.hpp"
#include "kmt/kmt_embed.hpp"
#include "kmt/stats.hpp"

using namespace kmt;
using namespace kmt::ep;

namespace {

void check_conservation(const DyadicTree& t) {
  for (int p = 0; p < t.depth; ++p)
    for (std::size_t k = 0; k < t.nodes_in(p); ++k) {
      const auto node = DyadicTree::index(p, k);
      const long l = t.count[DyadicTree::index(p + 1, 2 * k)];
      const long r = t.count[DyadicTree::index(p + 1, 2 * k + 1)];
      CHECK(l + r == t.count[node]);
      CHECK(std::labs(t.nhat[node]) <= t.count[node]);
      CHECK((t.count[node] + t.nhat[node]) % 2 == 0);
      CHECK(2 * l == t.count[node] + t.nhat[node]);
    }
}

}  // namespace

TEST_CASE("walk quantile table inverts the exact walk CDF") {
  WalkQuantileTable table(40);
  WalkQuantileTable logspace(40, 0);
  for (long N : {1L, 2L, 7L, 40L}) {
    const auto pmf = make_walk_pmf(static_cast<int>(N));
    for (double u : {1e-12, 0.01, 0.3, 0.5, 0.5000001, 0.77, 0.99, 1 - 1e-12}) {
      const long expected = static_cast<long>(Rational(2 * quantile(pmf, Rational(u))).get_d());
      CHECK(table.quantile(N, u) == expected);
      CHECK(logspace.quantile(N, u) == expected);
    }
  }
  CHECK(table.quantile(0, 0.3) == 0);
  CHECK_THROWS_AS(table.quantile(3, 0.0), InvalidParameter);
  CHECK_THROWS_AS(table.cdf(41), InvalidParameter);
}

TEST_CASE("single unit of count travels down one branch") {
  const auto t = build_dyadic_tree(1, 6, 3);
  check_conservation(t);
  for (int p = 0; p <= 6; ++p) {
    long total = 0, nonzero = 0;
    for (std::size_t k = 0; k < t.nodes_in(p); ++k) {
      total += t.count[DyadicTree::index(p, k)];
      nonzero += t.count[DyadicTree::index(p, k)] != 0;
    }
    CHECK(total == 1);
    CHECK(nonzero == 1);
  }
}

TEST_CASE("tree counts are conserved and zero subtrees stay zero") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto t = build_dyadic_tree(37, 7, seed);
    check_conservation(t);
    for (std::size_t node = 0; node < t.count.size(); ++node)
      if (t.count[node] == 0) CHECK(t.nhat[node] == 0);
    long leaves = 0;
    for (std::size_t k = 0; k < t.nodes_in(7); ++k) leaves += t.count[DyadicTree::index(7, k)];
    CHECK(leaves == 37);
    CHECK(t.lemma_violations == 0);
  }
}

TEST_CASE("tree is deterministic in the seed and replication") {
  WalkQuantileTable table(500);
  const auto a = build_dyadic_tree(500, 9, 42, table, {}, 3);
  const auto b = build_dyadic_tree(500, 9, 42, table, {}, 3);
  const auto c = build_dyadic_tree(500, 9, 42, table, {}, 4);
  CHECK(a.count == b.count);
  CHECK(a.z == b.z);
  CHECK(a.count != c.count);
}

TEST_CASE("node cap and parameter errors") {
  WalkQuantileTable table(10);
  TreeOptions small;
  small.node_cap = 100;
  CHECK_THROWS_AS(build_dyadic_tree(10, 7, 1, table, small), CapabilityError);
  CHECK_NOTHROW(build_dyadic_tree(10, 5, 1, table, small));
  CHECK_THROWS_AS(build_dyadic_tree(0, 3, 1), InvalidParameter);
  CHECK_THROWS_AS(build_dyadic_tree(11, 3, 1, table), InvalidParameter);
}

TEST_CASE("first split follows Bin(1024, 1/2)") {
  constexpr long n = 1024;
  constexpr int reps = 2000;
  WalkQuantileTable table(n);
  // cells: <=496, 497..527 in pairs of one value each, >=528
  const auto& cdf = table.cdf(n);  // P{S_n <= -n + 2i} = P{left <= i}
  std::vector<double> expected, observed;
  std::vector<long> cuts;
  for (long v = 496; v <= 528; v += 2) cuts.push_back(v);
  std::vector<double> prob;
  double prev = 0;
  for (long c : cuts) {
    prob.push_back(cdf[static_cast<std::size_t>(c)] - prev);
    prev = cdf[static_cast<std::size_t>(c)];
  }
  prob.push_back(1 - prev);
  observed.assign(prob.size(), 0);
  for (int r = 0; r < reps; ++r) {
    const auto t = build_dyadic_tree(n, 10, 2024, table, {}, static_cast<std::uint64_t>(r));
    const long left = t.count[DyadicTree::index(1, 0)];
    std::size_t cell = 0;
    while (cell < cuts.size() && left > cuts[cell]) ++cell;
    observed[cell] += 1;
  }
  for (double p : prob) expected.push_back(p * reps);
  const double pv = stats::chi_square_p_value(observed, expected, static_cast<int>(prob.size()) - 1);
  CHECK(pv > 0.001);
}

TEST_CASE("extracted paths are pinned and match prefix counts") {
  const auto t = build_dyadic_tree(300, 1, 9);
  const auto p = extract_paths(t);
  REQUIRE(p.t.size() == 3);
  CHECK(p.g.front() == 0.0);
  CHECK(p.g.back() == doctest::Approx(0.0));
  CHECK(p.w0.front() == 0.0);
  CHECK(p.w0.back() == 0.0);
  CHECK(p.w0[1] == doctest::Approx(t.z[0] / 2));
  CHECK(p.g[1] == doctest::Approx((t.count[1] - 150.0) / std::sqrt(300.0)));
  const auto deep = extract_paths(build_dyadic_tree(1000, 8, 2));
  for (std::size_t k = 1; k < deep.prefix.size(); ++k) CHECK(deep.prefix[k] >= deep.prefix[k - 1]);
  CHECK(deep.prefix.back() == 1000);
}

TEST_CASE("series bridge has covariance s(1-t)") {
  constexpr int reps = 20000;
  std::vector<double> a, b;
  for (int r = 0; r < reps; ++r) {
    const auto p = extract_paths(build_dyadic_tree(1, 2, 5 + static_cast<std::uint64_t>(r)));
    a.push_back(p.w0[1]);
    b.push_back(p.w0[2]);
  }
  const double va = stats::variance(a), vb = stats::variance(b);
  CHECK(std::abs(va - 3.0 / 16) <= 3 * (3.0 / 16) * std::sqrt(2.0 / reps));
  CHECK(std::abs(vb - 0.25) <= 3 * 0.25 * std::sqrt(2.0 / reps));
}

TEST_CASE("deviation statistics") {
  const auto t = build_dyadic_tree(256, 8, 11);
  const auto s = deviation_stats(t);
  CHECK(s.d_n >= 0);
  CHECK(std::isfinite(s.d_n));
  CHECK(s.delta_g >= 0);
  CHECK(s.delta_w0 >= 0);
  CHECK(s.chi2max >= t.z[0] * t.z[0]);
  const auto p = extract_paths(t);
  double worst = 0;
  for (std::size_t k = 0; k < p.t.size(); ++k)
    worst = std::max(worst, std::abs(16.0 * (p.g[k] - p.w0[k])));
  CHECK(s.d_n == doctest::Approx(worst).epsilon(1e-9));
}

TEST_CASE("depth rules") {
  CHECK(depth_for(256, "ceil-log2") == 8);
  CHECK(depth_for(257, "ceil-log2") == 9);
  CHECK(depth_for(257, "floor-log2") == 8);
  CHECK(depth_for(1, "ceil-log2") == 1);
  CHECK(depth_for(100, "fixed:5") == 5);
  CHECK_THROWS_AS(depth_for(100, "fixed:0"), InvalidParameter);
  CHECK_THROWS_AS(depth_for(100, "fixed:x"), InvalidParameter);
  CHECK_THROWS_AS(depth_for(100, "round"), InvalidParameter);
}

TEST_CASE("small experiment is deterministic and reports three tail levels") {
  EpConfig cfg;
  cfg.n_list = {64, 256};
  cfg.reps = 40;
  cfg.seed = 7;
  const auto a = run_ep_experiment(cfg);
  const auto b = run_ep_experiment(cfg);
  REQUIRE(a.rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.rows[i].mean_d == b.rows[i].mean_d);
    CHECK(a.rows[i].tails.size() == 3);
    CHECK(a.rows[i].lemma_violations == 0);
  }
  CHECK(a.samples[1].size() == 40);
  cfg.reps = 1;
  CHECK_THROWS_AS(run_ep_experiment(cfg), InvalidParameter);
}
