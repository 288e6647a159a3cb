#include <cmath>

#include "kmt/errors.hpp"
#include "kmt/stats.hpp"
#include "kmt/stein_markov.hpp"

namespace kmt::stein {

using stats::CompensatedSum;

namespace {

struct Law {
  std::vector<long double> w;     // centered values
  std::vector<long double> mass;
};

long double expect(const Law& law, auto&& f) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < law.w.size(); ++i) acc.add(law.mass[i] * f(law.w[i]));
  return acc.value();
}

bool le(long double lhs, long double rhs) { return lhs <= rhs * (1 + 1e-12L); }

}  // namespace

namespace {

struct Laws {
  int n = 0, k = 0;
  Rational p;
  long double drift = 0, s = 0;
  Law wo, w;
};

Laws make_laws(int n, int k, const Rational& p) {
  if (n < 1 || k < 1 || k > n) throw InvalidParameter("need 1 <= k <= n");
  if (sgn(p) < 0 || p > 1) throw InvalidParameter("p must lie in [0,1]");
  if (Rational(p * n).get_den() != 1) throw InvalidParameter("n*p must be an integer");
  const Rational q = 1 - p;
  Laws L;
  L.n = n;
  L.k = k;
  L.p = p;
  L.drift = to_long_double(Rational((p - q) * k));
  L.s = to_long_double(Rational((p - q) * n));
  const int plus = static_cast<int>(Rational(p * n).get_num().get_si());
  // S' = 2J' - k for J' hypergeometric; S = 2J - k for J binomial.
  auto hyp = make_hypergeometric(n, k, 2 * plus - n, HypergeoForm::Hat);
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    L.wo.w.push_back(2 * to_long_double(hyp.atom(i)) - k - L.drift);
    L.wo.mass.push_back(to_long_double(hyp.mass(i)));
  }
  auto row = binomial_row(static_cast<unsigned>(k));
  std::vector<Rational> pp(k + 1), qq(k + 1);
  pp[0] = qq[0] = 1;
  for (int j = 1; j <= k; ++j) {
    pp[j] = pp[j - 1] * p;
    qq[j] = qq[j - 1] * q;
  }
  for (int j = 0; j <= k; ++j) {
    Rational m = Rational(row[static_cast<std::size_t>(j)]) * pp[j] * qq[k - j];
    if (sgn(m) == 0) continue;
    L.w.w.push_back(2.0L * j - k - L.drift);
    L.w.mass.push_back(to_long_double(m));
  }
  return L;
}

HoeffdingReport evaluate(const Laws& L, double lambda, double a, double b) {
  if (!(b < 0.5) || b < 0) throw InvalidParameter("b must lie in [0, 1/2)");
  const int k = L.k, n = L.n;
  const long double rk = std::sqrt(static_cast<long double>(k));
  const long double lam = lambda, A = a, Bq = b, drift = L.drift;
  auto lin = [&](long double x) { return std::exp(lam * x); };
  auto quad = [&](long double x) { return std::exp((A / rk) * x + (Bq / k) * x * x); };
  auto sq = [&](long double x) { return std::exp((Bq / k) * (x + drift) * (x + drift)); };
  const long double root = 1 / std::sqrt(1 - 2 * Bq);
  const long double lin_wo = expect(L.wo, lin), lin_w = expect(L.w, lin), lin_b = std::exp(lam * lam * k / 2);
  const long double quad_wo = expect(L.wo, quad), quad_w = expect(L.w, quad),
                    quad_b = root * std::exp(A * A / (2 * (1 - 2 * Bq)));
  const long double sq_wo = expect(L.wo, sq), sq_w = expect(L.w, sq),
                    sq_b = root * std::exp(Bq / (1 - 2 * Bq) * (static_cast<long double>(k) / n) * (L.s * L.s / n));
  HoeffdingReport r;
  r.n = n;
  r.k = k;
  r.p = L.p;
  r.lambda = lambda;
  r.a = a;
  r.b = b;
  r.lin_wo = static_cast<double>(lin_wo);
  r.lin_w = static_cast<double>(lin_w);
  r.lin_bound = static_cast<double>(lin_b);
  r.quad_wo = static_cast<double>(quad_wo);
  r.quad_w = static_cast<double>(quad_w);
  r.quad_bound = static_cast<double>(quad_b);
  r.sq_wo = static_cast<double>(sq_wo);
  r.sq_w = static_cast<double>(sq_w);
  r.sq_bound = static_cast<double>(sq_b);
  r.pass = le(lin_wo, lin_w) && le(lin_w, lin_b) && le(quad_wo, quad_w) && le(quad_w, quad_b) && le(sq_wo, sq_w) &&
           le(sq_w, sq_b);
  return r;
}

}  // namespace

HoeffdingReport hoeffding_bounds_check(int n, int k, const Rational& p, double lambda, double a, double b) {
  if (!(b < 0.5) || b < 0) throw InvalidParameter("b must lie in [0, 1/2)");
  return evaluate(make_laws(n, k, p), lambda, a, b);
}

HoeffdingSweep sweep_hoeffding(int n_max, const std::vector<double>& lambdas, const std::vector<double>& as,
                               const std::vector<double>& bs, Exec exec) {
  if (n_max < 1) throw InvalidParameter("n_max must be positive");
  auto per_n = map_range(exec, 1, n_max + 1, [&](long nl) {
    const int n = static_cast<int>(nl);
    HoeffdingSweep part;
    auto record = [&](const HoeffdingReport& r) {
      ++part.checks;
      if (!r.pass) {
        ++part.violations;
        if (part.failures.size() < 20) part.failures.push_back(r);
      }
    };
    for (int k = 1; k <= n; ++k)
      for (int plus = 1; plus < n; ++plus) {
        const Laws laws = make_laws(n, k, frac(plus, n));
        for (double lam : lambdas) record(evaluate(laws, lam, 0.0, 0.0));
        for (double a : as)
          for (double b : bs) record(evaluate(laws, 0.0, a, b));
      }
    return part;
  });
  HoeffdingSweep sw;
  for (auto& part : per_n) {
    sw.checks += part.checks;
    sw.violations += part.violations;
    for (auto& f : part.failures)
      if (sw.failures.size() < 20) sw.failures.push_back(std::move(f));
  }
  sw.pass = sw.violations == 0;
  return sw;
}

}  // namespace kmt::stein
