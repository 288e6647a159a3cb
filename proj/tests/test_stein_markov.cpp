#include <doctest.h>

#include <cmath>

#include "kmt/errors.hpp"
#include "kmt/stein_markov.hpp"

using namespace kmt;
using namespace kmt::stein;

namespace {

LatticePMF law(Rational offset, std::vector<long> weights, long denom) {
  std::vector<Rational> m;
  for (long w : weights) m.push_back(frac(w, denom));
  return LatticePMF(offset, m);
}

std::vector<Rational> rationals(std::vector<Rational> v) { return v; }

// T(x) = x + (2/p(x)) sum_{y>x} y p(y), written out directly.
std::vector<Rational> direct_stein(const LatticePMF& p) {
  std::vector<Rational> t(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    Rational s = 0;
    for (std::size_t j = i + 1; j < p.size(); ++j) s += p.atom(j) * p.mass(j);
    t[i] = p.atom(i) + 2 * s / p.mass(i);
  }
  return t;
}

StationaryCoupling solve(const SteinCoefficient& tx, const LatticePMF& px, const SteinCoefficient& ty,
                         const LatticePMF& py, std::size_t exact_limit = 0) {
  return solve_stationary(build_joint_chain(tx, px, ty, py), SolveOptions{exact_limit});
}

double diagonal_mass(const StationaryCoupling& sc) {
  double d = 0;
  for (std::size_t s = 0; s < sc.gamma.size(); ++s)
    if (sc.in_class[s] && sc.h(s) == 0.0) d += sc.gamma[s];
  return d;
}

}  // namespace

TEST_CASE("general formula on small laws") {
  const auto u = law(-1, {1, 1, 1}, 3);
  CHECK(stein_from_pmf(u).values() == rationals({1, 2, 1}));
  CHECK(stein_from_pmf(make_centered_binomial(4, frac(1, 2))).values() == std::vector<Rational>(5, 2));
  const auto fair = make_walk_pmf(1);
  CHECK(stein_from_pmf(fair).values() == rationals({frac(1, 2), frac(1, 2)}));
  CHECK_THROWS_AS(stein_from_pmf(law(0, {1, 1}, 2)), InvalidParameter);
  for (int n = 1; n <= 12; ++n)
    for (int j = 1; j < n; ++j) {
      const auto p = make_centered_binomial(n, frac(j, n));
      const auto t = stein_from_pmf(p);
      CHECK(t.values() == direct_stein(p));
      CHECK(valid_pair(t, p));
      CHECK(t.value(0) == abs(p.atom(0)));
      CHECK(t.value(t.size() - 1) == abs(p.last_atom()));
    }
}

TEST_CASE("closed forms equal the general formula") {
  CHECK(stein_binomial(4, frac(1, 2)).values() == std::vector<Rational>(5, 2));
  const auto h = stein_hypergeometric(2, 1, 0);
  CHECK(h.values() == rationals({frac(1, 2), frac(1, 2)}));
  CHECK(stein_binomial(4, frac(1, 4)) == stein_from_pmf(make_centered_binomial(4, frac(1, 4))));
  // T(x) = 2pqn + (q-p)x on Bin(4,1/4)
  const auto b = stein_binomial(4, frac(1, 4));
  for (std::size_t i = 0; i < b.size(); ++i) {
    const Rational x = b.offset() + static_cast<unsigned long>(i);
    if (i > 0 && i + 1 < b.size()) CHECK(b.value(i) == frac(3, 2) + x / 2);
  }
  // balanced hypergeometric: T(x) = k(n-k)/(2n) + 2x^2/n away from the endpoints
  const auto hb = stein_hypergeometric(12, 6, 0);
  for (std::size_t i = 1; i + 1 < hb.size(); ++i) {
    const Rational x = hb.offset() + static_cast<unsigned long>(i);
    CHECK(hb.value(i) == frac(36, 24) + 2 * x * x / 12);
  }
  for (int n = 2; n <= 14; ++n)
    for (int k = 1; k < n; ++k)
      for (int s = -(n - 2); s <= n - 2; s += 2)
        CHECK(stein_hypergeometric(n, k, s) == stein_from_pmf(make_hypergeometric(n, k, s, HypergeoForm::Centered)));
}

TEST_CASE("convolution rule conditions on the sum") {
  const auto u = law(-1, {1, 1, 1}, 3);
  const auto tu = stein_from_pmf(u);
  const auto tz = stein_convolve(tu, u, tu, u);
  CHECK(tz.values() == rationals({2, 3, frac(8, 3), 3, 2}));
  CHECK(tz == stein_from_pmf(convolve(u, u)));
  const auto d = point_mass(0);
  CHECK(stein_convolve(tu, u, stein_from_pmf(d), d) == tu);
  const auto s2 = make_walk_pmf(2);
  const auto t2 = stein_from_pmf(s2);
  CHECK(stein_convolve(t2, s2, t2, s2).values() == std::vector<Rational>(5, 2));
}

TEST_CASE("scaling rule for 2X + R") {
  const auto x2 = make_centered_binomial(2, frac(1, 2));
  const auto y2 = stein_scale_perturb(stein_from_pmf(x2), x2);
  CHECK(y2.at(0) == 5);
  CHECK(y2.at(1) == frac(17, 3));
  CHECK(y2.at(-1) == frac(17, 3));
  CHECK(y2.at(5) == 5);
  CHECK(y2.at(-5) == 5);
  CHECK(y2 == stein_from_pmf(perturb_scale(x2)));
  const auto x4 = make_centered_binomial(4, frac(1, 2));
  const auto y4 = stein_scale_perturb(stein_from_pmf(x4), x4);
  for (int y = -4; y <= 4; y += 2) CHECK(y4.at(y) == 9);
  for (int y = -3; y <= 3; y += 2) CHECK(y4.at(y) == 10 - frac(y * y, 5));
  CHECK(y4.at(5) == 5);
  CHECK(y4.at(-5) == 5);
}

TEST_CASE("cross-validation corpus has no mismatches") {
  const auto r = cross_validate_stein(14, Exec::Serial);
  CHECK(r.pass);
  CHECK(r.mismatch_count == 0);
  CHECK(r.closed_form_checks == r.laws);
  CHECK(r.scaling_checks == r.laws);
  CHECK(r.convolution_checks > 0);
}

TEST_CASE("joint chain rates") {
  const auto b4 = make_centered_binomial(4, frac(1, 2));
  const auto t4 = stein_binomial(4, frac(1, 2));
  const auto same = build_joint_chain(t4, b4, t4, b4);
  for (std::size_t i = 0; i < same.nx; ++i) {
    const auto s = same.index(i, i);
    CHECK(sgn(same.up_stay[s]) == 0);
    CHECK(sgn(same.stay_up[s]) == 0);
    CHECK(sgn(same.down_stay[s]) == 0);
    CHECK(sgn(same.stay_down[s]) == 0);
  }
  for (const auto& q : same.Q) CHECK(sgn(q) == 0);

  const auto x = make_centered_binomial(16, frac(1, 2));
  const auto v = make_centered_binomial(4, frac(1, 2));
  const auto y = perturb_scale(v);
  const auto r = build_joint_chain(stein_binomial(16, frac(1, 2)), x,
                                   stein_scale_perturb(stein_binomial(4, frac(1, 2)), v), y);
  for (std::size_t i = 0; i < r.nx; ++i)
    for (std::size_t j = 1; j + 1 < r.ny; ++j) {
      const Rational yy = r.y_atom(j);
      const Rational expect = yy.get_den() == 1 && yy.get_num() % 2 == 0 ? Rational(1) : abs(2 - yy * yy / 5);
      CHECK(r.Q[r.index(i, j)] == expect);
    }
  for (std::size_t s = 0; s < r.Q.size(); ++s) {
    CHECK(sgn(r.up_up[s]) >= 0);
    CHECK(sgn(r.down_down[s]) >= 0);
  }
}

TEST_CASE("identical chains couple on the diagonal") {
  for (const auto& [n, num] : std::vector<std::pair<int, int>>{{2, 1}, {4, 1}, {9, 3}, {10, 7}}) {
    const auto p = make_centered_binomial(n, frac(num, n));
    const auto t = stein_binomial(n, frac(num, n));
    const auto sc = solve(t, p, t, p, 100);
    CHECK(sc.closed_classes == 1);
    CHECK(sc.class_size == p.size());
    CHECK(diagonal_mass(sc) >= 1 - 1e-12);
    for (std::size_t i = 0; i < p.size(); ++i)
      CHECK(sc.gamma[i * sc.ny + i] == doctest::Approx(p.mass(i).get_d()).epsilon(1e-12));
    REQUIRE(sc.exact_gamma);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK((*sc.exact_gamma)[i * sc.ny + i] == p.mass(i));
  }
}

TEST_CASE("stationary solve: residual, marginals and the balance identity") {
  const auto x = make_centered_binomial(16, frac(1, 2));
  const auto v = make_centered_binomial(4, frac(1, 2));
  const auto y = perturb_scale(v);
  const auto sc = solve(stein_binomial(16, frac(1, 2)), x, stein_scale_perturb(stein_binomial(4, frac(1, 2)), v),
                        y, 2000);
  CHECK(sc.closed_classes == 1);
  CHECK(sc.residual <= 1e-10);
  CHECK(sc.marginal_error <= 1e-9);
  CHECK(sc.exact_vs_float <= 1e-12);
  for (std::size_t s = 0; s < sc.gamma.size(); ++s)
    if (!sc.in_class[s]) CHECK(sc.gamma[s] == 0.0);
  const auto [lhs, rhs] = balance_identity(sc, [](double h) { return h >= 0 ? 1.0 : 0.0; });
  CHECK(std::abs(lhs - rhs) <= 1e-10);
  const auto [l2, r2] = balance_identity(sc, [](double h) { return std::exp(0.3 * h); });
  CHECK(std::abs(l2 - r2) <= 1e-10 * std::max(1.0, std::abs(l2)));
}

TEST_CASE("functional bounds on solved couplings") {
  const auto b4 = make_centered_binomial(4, frac(1, 2));
  const auto t4 = stein_binomial(4, frac(1, 2));
  const auto same = solve(t4, b4, t4, b4);
  for (double theta : {0.0, 0.3, 1.0}) {
    const auto f = coupling_functionals(same, {theta, 0, 0.5, 1.0});
    CHECK(f.mgf == doctest::Approx(1.0));
    CHECK(f.p_tail == 0.0);
    CHECK(f.ok());
  }
  const auto x = make_centered_binomial(16, frac(1, 2));
  const auto v = make_centered_binomial(4, frac(1, 2));
  const auto sc = solve(stein_binomial(16, frac(1, 2)), x, stein_scale_perturb(stein_binomial(4, frac(1, 2)), v),
                        perturb_scale(v));
  for (long a = 0; a <= 3; ++a) {
    const auto f = coupling_functionals(sc, {0.25, a, 0.5, 1.0});
    CHECK(f.ok());
    CHECK(f.mgf < f.mgf_rhs);
    CHECK(f.mgf < f.exp_rhs);
    CHECK(f.p_tail <= f.tail_rhs);
  }
  CHECK(coupling_functionals(sc, {0.0, 0, 0.5, 1.0}).mgf == doctest::Approx(1.0));
  CHECK_THROWS_AS(coupling_functionals(sc, {-0.1, 0, 0.5, 1.0}), InvalidParameter);
  CHECK_THROWS_AS(coupling_functionals(sc, {0.1, 0, 1.5, 1.0}), InvalidParameter);
}

TEST_CASE("binomial pair coupling") {
  CHECK(binomial_theta_admissible(0.25));
  CHECK_FALSE(binomial_theta_admissible(0.3));
  CHECK(8 * 0.0625 * std::exp(0.5) == doctest::Approx(0.824).epsilon(1e-3));
  CHECK_THROWS_AS(couple_binomials(4, 0.3), InvalidParameter);
  CHECK(couple_binomials(1, 0.0).functional == doctest::Approx(1.0).epsilon(1e-12));
  const auto r = couple_binomials(4, 0.25);
  CHECK(r.pass);
  CHECK(r.functional <= r.hat_bound);
  CHECK(r.functional > 1.0);
  const auto sw = sweep_binomials(12, 0.25);
  CHECK(sw.rows.size() == 12);
  for (const auto& row : sw.rows) CHECK(row.functional <= sw.kappa);
}

TEST_CASE("hypergeometric pair couplings") {
  CHECK_THROWS_AS(couple_hypergeos_doubling(7, 3, {0.1}), InvalidParameter);
  CHECK_THROWS_AS(couple_hypergeos_doubling(12, 2, {0.1}), InvalidParameter);
  const auto d = couple_hypergeos_doubling(8, 4, {0.0, 0.05, 0.1});
  CHECK(d.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.values[1] <= 1.5);
  CHECK(d.values[1] <= d.values[2]);
  CHECK(d.functionals_ok);
  const auto zero = couple_hypergeos_bias(12, 6, 0, {0.1, 0.3});
  for (double v : zero.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  const auto b = couple_hypergeos_bias(12, 6, 2, {0.1});
  CHECK(b.residual <= 1e-10);
  CHECK(b.values[0] >= 1.0);
  CHECK(b.values[0] <= std::exp(1.0));
}

TEST_CASE("expectation bound can fail when Q is fractional") {
  // n=6, k=3, s=4: Q takes non-integer values and E[e^{theta|H|}] exceeds 1 + E[Q(e^{theta Q}-1)]
  const auto r = couple_hypergeos_bias(6, 3, 4, {0.5});
  bool fractional = false;
  const auto px = make_hypergeometric(6, 3, 0, HypergeoForm::Centered);
  const auto py = make_hypergeometric(6, 3, 4, HypergeoForm::Centered);
  const auto rates = build_joint_chain(stein_hypergeometric(6, 3, 0), px, stein_hypergeometric(6, 3, 4), py);
  for (const auto& q : rates.Q) fractional = fractional || q.get_den() != 1;
  CHECK(fractional);
  CHECK(r.functionals_ok);
  CHECK(r.expectation_failures > 0);
}

TEST_CASE("Hoeffding comparison") {
  const auto deg = hoeffding_bounds_check(2, 2, frac(1, 2), 1.0, 0.0, 0.0);
  CHECK(deg.lin_wo == doctest::Approx(1.0));
  CHECK(deg.pass);
  const auto zero = hoeffding_bounds_check(6, 3, frac(1, 3), 0.0, 0.0, 0.0);
  CHECK(zero.lin_wo == doctest::Approx(1.0));
  CHECK(zero.lin_w == doctest::Approx(1.0));
  const auto r = hoeffding_bounds_check(4, 2, frac(1, 2), 1.0, 0.0, 0.0);
  CHECK(r.lin_wo == doctest::Approx((std::exp(-2.0) + 4 + std::exp(2.0)) / 6));
  CHECK(r.lin_w == doctest::Approx(std::pow((std::exp(-1.0) + std::exp(1.0)) / 2, 2)));
  CHECK(r.lin_bound == doctest::Approx(std::exp(1.0)));
  CHECK(r.pass);
  CHECK_THROWS_AS(hoeffding_bounds_check(4, 2, frac(1, 2), 1.0, 0.0, 0.5), InvalidParameter);
  CHECK_THROWS_AS(hoeffding_bounds_check(4, 2, frac(1, 3), 1.0, 0.0, 0.0), InvalidParameter);
  const auto sw = sweep_hoeffding(12, {-1, 0.5}, {0, 1}, {0, 0.3});
  CHECK(sw.pass);
  CHECK(sw.violations == 0);
  CHECK(sw.checks > 0);
}

TEST_CASE("stationary corpus") {
  const auto c = check_stationary_corpus(400, Exec::Serial);
  CHECK(c.pass);
  CHECK(c.cases.size() > 50);
  for (const auto& k : c.cases) {
    CHECK(k.states <= 400);
    CHECK(k.error.empty());
    if (k.diagonal_mass) CHECK(*k.diagonal_mass >= 1 - 1e-12);
  }
}
