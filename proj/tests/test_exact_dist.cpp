#include <doctest.h>

#include <array>
#include <cmath>

#include "kmt/errors.hpp"
#include "kmt/exact_dist.hpp"

using namespace kmt;

namespace {

LatticePMF law(Rational offset, std::vector<long> weights, long denom) {
  std::vector<Rational> m;
  for (long w : weights) m.push_back(frac(w, denom));
  return LatticePMF(offset, m);
}

Rational total(const LatticePMF& p) {
  Rational s = 0;
  for (const auto& m : p.masses()) s += m;
  return s;
}

// Direct enumeration of all 2^n sign sequences.
std::vector<long> walk_counts(int n) {
  std::vector<long> c(static_cast<std::size_t>(n + 1));
  for (unsigned long mask = 0; mask < (1ul << n); ++mask) c[static_cast<std::size_t>(__builtin_popcountl(mask))]++;
  return c;
}

}  // namespace

TEST_CASE("walk law on the half lattice matches enumeration of sign sequences") {
  auto w1 = make_walk_pmf(1);
  CHECK(w1.offset() == frac(-1, 2));
  CHECK(w1 == law(frac(-1, 2), {1, 1}, 2));
  CHECK(w1.scale() == 2);
  CHECK(make_walk_pmf(2) == law(-1, {1, 2, 1}, 4));
  CHECK(make_walk_pmf(4) == law(-2, {1, 4, 6, 4, 1}, 16));
  for (int n = 1; n <= 14; ++n) {
    auto c = walk_counts(n);
    auto w = make_walk_pmf(n);
    REQUIRE(w.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(w.mass(i) == Rational(c[i]) / pow2(n));
    CHECK(total(w) == 1);
  }
  CHECK_THROWS_AS(make_walk_pmf(0), InvalidParameter);
}

TEST_CASE("centered binomial masses and mean") {
  CHECK(make_centered_binomial(2, frac(1, 2)) == law(-1, {1, 2, 1}, 4));
  CHECK(make_centered_binomial(4, frac(1, 2)) == law(-2, {1, 4, 6, 4, 1}, 16));
  CHECK(make_centered_binomial(4, frac(1, 4)) == law(-1, {81, 108, 54, 12, 1}, 256));
  for (int n = 1; n <= 20; ++n)
    for (int j = 1; j < n; ++j) {
      auto p = make_centered_binomial(n, frac(j, n));
      CHECK(p.mean() == 0);
      CHECK(total(p) == 1);
    }
  CHECK_THROWS_AS(make_centered_binomial(3, frac(1, 2)), InvalidParameter);
}

TEST_CASE("hypergeometric laws match enumeration of draws without replacement") {
  auto h = make_hypergeometric(2, 1, 0);
  CHECK(h == law(0, {1, 1}, 2));
  CHECK(make_hypergeometric(2, 1, 0, HypergeoForm::Centered).offset() == frac(-1, 2));
  // S_2[4,0] in {-2,0,2} with masses 1/6, 2/3, 1/6, i.e. plus-count 0,1,2
  CHECK(make_hypergeometric(4, 2, 0) == law(0, {1, 4, 1}, 6));
  // ordered draws from a box of n coupons with (n+s)/2 plus ones
  for (int n = 2; n <= 9; ++n)
    for (int s = -n + 2; s <= n - 2; s += 2)
      for (int k = 1; k < n; ++k) {
        const int plus = (n + s) / 2;
        std::vector<long> counts(static_cast<std::size_t>(k + 1));
        long all = 0;
        for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
          if (__builtin_popcountl(mask) != plus) continue;
          ++all;
          counts[static_cast<std::size_t>(__builtin_popcountl(mask & ((1ul << k) - 1)))]++;
        }
        auto pmf = make_hypergeometric(n, k, s);
        for (std::size_t i = 0; i < pmf.size(); ++i) {
          const Rational atom = pmf.atom(i);
          REQUIRE(atom.get_den() == 1);
          CHECK(pmf.mass(i) == frac(counts[atom.get_num().get_ui()], all));
        }
        auto c = make_hypergeometric(n, k, s, HypergeoForm::Centered);
        CHECK(c.mean() == 0);
        if (s == 0)
          for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.mass(i) == c.mass(c.size() - 1 - i));
      }
  CHECK_THROWS_AS(make_hypergeometric(4, 2, 1), InvalidParameter);
  CHECK_THROWS_AS(make_hypergeometric(4, 2, 6), InvalidParameter);
}

TEST_CASE("perturb_scale places f(x)/2 on even and (f(x)+f(x-1))/4 on odd atoms") {
  CHECK(perturb_scale(point_mass(0)) == law(-1, {1, 2, 1}, 4));
  CHECK(perturb_scale(make_walk_pmf(1)) == law(-2, {1, 2, 2, 2, 1}, 8));
  auto y = perturb_scale(make_walk_pmf(2));
  CHECK(y == law(-3, {1, 2, 3, 4, 3, 2, 1}, 16));
  CHECK(total(y) == 1);
}

TEST_CASE("convolution is exact, commutative and associative") {
  auto w1 = make_walk_pmf(1);
  CHECK(convolve(w1, w1) == make_walk_pmf(2));
  auto u = law(-1, {1, 1, 1}, 3);
  CHECK(convolve(u, u) == law(-2, {1, 2, 3, 2, 1}, 9));
  CHECK(convolve(point_mass(0), u) == u);
  auto a = make_centered_binomial(4, frac(1, 4));
  auto b = make_hypergeometric(6, 3, 2, HypergeoForm::Centered);
  CHECK(convolve(a, b) == convolve(b, a));
  CHECK(convolve(convolve(a, b), u) == convolve(a, convolve(b, u)));
}

TEST_CASE("tail tables are exact suffix sums") {
  auto w2 = make_walk_pmf(2);
  CHECK(tail(w2).at(1) == frac(1, 4));
  CHECK(tail(w2).at(-1) == 1);
  CHECK(tail(make_walk_pmf(4)).at(1) == frac(5, 16));
  CHECK(tail(w2).at(2) == 0);
}

TEST_CASE("expectations: exact moments and float transcendental functionals") {
  auto w4 = make_walk_pmf(4);
  std::array<double, 1> one{1.0}, two{2.0}, zero{0.0};
  CHECK(*expect(w4, make_functional("moment", one)).exact == 0);
  CHECK(*expect(w4, make_functional("moment", two)).exact == 1);
  CHECK(expect(w4, make_functional("abs-exp", zero)).value == 1.0);
  std::array<double, 1> th{0.5};
  const double direct = (2 * std::exp(1.0) + 8 * std::exp(0.5) + 6) / 16;
  CHECK(expect(w4, make_functional("abs-exp", th)).value == doctest::Approx(direct).epsilon(1e-15));
  CHECK_THROWS_AS(make_functional("nope", one), InvalidParameter);
}

TEST_CASE("quantile is the right-continuous inverse CDF") {
  auto w2 = make_walk_pmf(2);
  CHECK(quantile(w2, 0.5) == 0);
  CHECK(quantile(w2, 0.9) == 1);
  CHECK(quantile(w2, 0.1) == -1);
  CHECK_THROWS_AS(quantile(w2, 0.0), InvalidParameter);
  CHECK_THROWS_AS(quantile(w2, 1.0), InvalidParameter);
  for (int n : {3, 8, 15}) {
    auto p = make_walk_pmf(n);
    auto cdf = p.cdf();
    for (std::size_t i = 0; i + 1 < p.size(); ++i) CHECK(quantile(p, cdf[i]) == p.atom(i));
  }
}
