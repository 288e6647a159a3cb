#include <doctest.h>

#include <cmath>

#include "kmt/lemma_verify.hpp"

using namespace kmt;
using namespace kmt::lemmas;

namespace {

// Pascal triangle rows, independent of the library's multiplicative recurrence.
struct Pascal {
  std::vector<std::vector<BigInt>> rows{{1}};
  const BigInt& c(unsigned n, unsigned k) {
    while (rows.size() <= n) {
      const auto& prev = rows.back();
      std::vector<BigInt> next(prev.size() + 1);
      next.front() = next.back() = 1;
      for (std::size_t i = 1; i < prev.size(); ++i) next[i] = prev[i - 1] + prev[i];
      rows.push_back(std::move(next));
    }
    static const BigInt zero = 0;
    return k <= n ? rows[n][k] : zero;
  }
};

Rational alpha(Pascal& p, int m, int k) { return Rational(p.c(2 * m, m + k)) / pow2(2 * m); }
Rational beta(Pascal& p, int m, int k) {
  const int j = 4 * m + 2 * k;
  return j < 0 || j > 8 * m + 1 ? Rational(0) : Rational(p.c(8 * m + 1, j)) / pow2(8 * m);
}
Rational alpha_tail(Pascal& p, int m, int k) {
  Rational s = 0;
  for (int j = k; j <= m; ++j) s += alpha(p, m, j);
  return s;
}
Rational beta_tail(Pascal& p, int m, int k) {
  Rational s = 0;
  for (int j = k; 4 * m + 2 * j <= 8 * m + 1; ++j) s += beta(p, m, j);
  return s;
}

}  // namespace

TEST_CASE("alpha and beta tables agree with Pascal-triangle binomials") {
  auto t1 = alpha_beta_tables(1);
  CHECK(t1.alpha(1) == frac(1, 4));
  CHECK(t1.beta(1) == frac(21, 64));
  CHECK(alpha_beta_tables(2).alpha(2) == frac(1, 16));
  Pascal p;
  for (int m = 1; m <= 30; ++m) {
    auto t = alpha_beta_tables(m);
    CHECK(t.pascal_identity_holds());
    for (int k = 0; k <= m; ++k) {
      CHECK(t.alpha(k) == alpha(p, m, k));
      CHECK(t.alpha_tail(k) == alpha_tail(p, m, k));
    }
    for (int k = 0; k <= 2 * m; ++k) {
      CHECK(t.beta(k) == beta(p, m, k));
      CHECK(t.beta_tail(k) == beta_tail(p, m, k));
    }
  }
}

TEST_CASE("mass domination holds for every m and k checked by brute force") {
  Pascal p;
  long own_checks = 0;
  for (int m = 1; m <= 40; ++m)
    for (int k = 1; k <= m; ++k) {
      ++own_checks;
      CHECK(alpha(p, m, k) <= beta(p, m, k));
    }
  auto r = check_mass_domination(40);
  CHECK(r.pass);
  CHECK(r.violations.empty());
  CHECK(r.checks == own_checks);
  CHECK(alpha(p, 2, 1) == frac(1, 4));
  CHECK(beta(p, 2, 1) == frac(19448, 65536));
  CHECK(beta(p, 2, 2) == frac(6188, 65536));
}

TEST_CASE("shifted domination on the exact admissible region") {
  Pascal p;
  CHECK(alpha(p, 3, 1) == frac(15, 64));
  CHECK(beta(p, 3, 2) == frac(2042975, 16777216));
  for (int m = 1; m <= 30; ++m)
    for (int l = 1; 4 * m + 2 * l <= 8 * m + 1; ++l)
      for (int k = 1; k <= m; ++k) {
        // k <= l - (1 + l^3/m^2)/4, exact
        const Rational bound = Rational(l) - (1 + frac(l * l * l, m * m)) / 4;
        if (Rational(k) <= bound) CHECK(alpha(p, m, k) >= beta(p, m, l));
      }
  // special case alpha_m(l-1) >= beta_m(l) for l^3 <= 3 m^2
  for (int m = 1; m <= 30; ++m)
    for (int l = 1; l * l * l <= 3 * m * m && l - 1 <= m; ++l) CHECK(alpha(p, m, l - 1) >= beta(p, m, l));
  auto r = check_shifted_domination(60);
  CHECK(r.pass);
  CHECK(r.violations.empty());
  CHECK(r.checks > 0);
}

TEST_CASE("ratio monotonicity suite reports decreasing f(m,1)") {
  auto r = check_ratio_monotonicity(40, 6);
  CHECK(r.pass);
  std::vector<double> f1;
  for (const auto& [name, v] : r.values)
    if (name.rfind("f(", 0) == 0) f1.push_back(v);
  REQUIRE(f1.size() >= 2);
  for (std::size_t i = 1; i < f1.size(); ++i) CHECK(f1[i] <= f1[i - 1]);
  CHECK_THROWS(check_ratio_monotonicity(1, 1));
}

TEST_CASE("tail domination: part 1 everywhere, part 2 from a discovered threshold") {
  Pascal p;
  CHECK(alpha_tail(p, 1, 1) == frac(1, 4));
  CHECK(beta_tail(p, 1, 1) == frac(93, 256));
  for (int m = 1; m <= 30; ++m)
    for (int k = 1; k <= m; ++k) CHECK(alpha_tail(p, m, k) <= beta_tail(p, m, k));
  auto small = check_tail_domination(40);
  auto large = check_tail_domination(80);
  CHECK(small.pass);
  CHECK(large.pass);
  REQUIRE(small.threshold);
  REQUIRE(large.threshold);
  CHECK(*large.threshold >= *small.threshold);
  // brute-force part 2 from the reported threshold on
  for (int m = static_cast<int>(*small.threshold); m <= 40; ++m)
    for (int l = 1; 4 * m + 2 * l <= 8 * m + 1; ++l)
      for (int k = 1; k <= m; ++k)
        if (Rational(k) <= Rational(l) - frac(l * l, 4 * m) - 1) CHECK(alpha_tail(p, m, k) >= beta_tail(p, m, l));
}

TEST_CASE("entropy gap dominates 1.5 t^3") {
  CHECK(entropy_gap(0) == doctest::Approx(0.0));
  CHECK(static_cast<double>(entropy_gap(1)) == doctest::Approx(3 * std::log(2.0)).epsilon(1e-12));
  CHECK(static_cast<double>(entropy_gap(0.5L)) == doctest::Approx(0.2069).epsilon(1e-3));
  CHECK(static_cast<double>(bernoulli_divergence(0.5L)) == doctest::Approx(0.130812).epsilon(1e-5));
  CHECK(static_cast<double>(bernoulli_divergence(0.75L)) == doctest::Approx(0.316377).epsilon(1e-5));
  auto r = check_entropy_bound(2000);
  CHECK(r.pass);
  CHECK(r.checks == 2000);
  CHECK(r.worst_margin >= -1e-12);
}

TEST_CASE("Ash sandwich bounds on binomial point masses and tails") {
  auto r = check_ash_sandwich(120);
  CHECK(r.pass);
  CHECK(r.violations.empty());
  // n=2, k=1: exact 1/2 against lower bound 1/sqrt(8) * sqrt(2) = 1/2 and upper 1/sqrt(2 pi) * sqrt(2)
  CHECK(std::sqrt(2.0) / std::sqrt(8.0) == doctest::Approx(0.5));
  CHECK(std::sqrt(2.0) / std::sqrt(2 * M_PI) >= 0.5);
  // n=4, k=3 tail 5/16 <= exp(-4 D(3/4))
  CHECK(5.0 / 16 <= std::exp(-4 * static_cast<double>(bernoulli_divergence(0.5L))));
}

TEST_CASE("report pass flag mirrors the violation list") {
  for (const auto& r : {check_mass_domination(10), check_shifted_domination(10), check_tail_domination(10)}) {
    CHECK(r.pass == r.violations.empty());
    CHECK(r.rows.size() == 10);
  }
}
