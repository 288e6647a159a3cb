#include "kmt/exact_dist.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "kmt/errors.hpp"
#include "kmt/stats.hpp"

namespace kmt {

LatticePMF::LatticePMF(Rational offset, std::vector<Rational> masses, int scale)
    : offset_(std::move(offset)), masses_(std::move(masses)), scale_(scale) {
  if (masses_.empty()) throw InvalidParameter("empty pmf");
  Rational total;
  for (const auto& m : masses_) {
    if (sgn(m) <= 0) throw InvalidParameter("pmf mass must be positive");
    total += m;
  }
  if (total != 1) throw InvalidParameter("pmf masses must sum to 1, got " + to_string(total));
}

std::optional<std::size_t> LatticePMF::index_of(const Rational& x) const {
  Rational d = x - offset_;
  if (d.get_den() != 1 || sgn(d) < 0 || d >= static_cast<unsigned long>(size())) return {};
  return static_cast<std::size_t>(d.get_num().get_ui());
}

Rational LatticePMF::mass_at(const Rational& x) const {
  auto i = index_of(x);
  return i ? masses_[*i] : Rational(0);
}

Rational LatticePMF::mean() const {
  Rational m;
  for (std::size_t i = 0; i < size(); ++i) m += masses_[i] * atom(i);
  return m;
}

std::vector<Rational> LatticePMF::cdf() const {
  std::vector<Rational> c(size());
  Rational run;
  for (std::size_t i = 0; i < size(); ++i) {
    run += masses_[i];
    c[i] = run;
  }
  return c;
}

Rational TailTable::at(const Rational& x) const {
  Rational d = x - offset;
  if (sgn(d) <= 0) return 1;
  // smallest index >= d
  BigInt idx = d.get_num() / d.get_den();
  if (idx * d.get_den() != d.get_num()) idx += 1;
  if (idx >= static_cast<unsigned long>(values.size())) return 0;
  return values[idx.get_ui()];
}

Rational dyadic(const BigInt& num, unsigned long e) {
  if (num == 0) return 0;
  unsigned long tz = mpz_scan1(num.get_mpz_t(), 0);
  unsigned long cut = std::min(tz, e);
  Rational q;
  mpz_fdiv_q_2exp(mpq_numref(q.get_mpq_t()), num.get_mpz_t(), cut);
  mpz_set_ui(mpq_denref(q.get_mpq_t()), 1);
  mpz_mul_2exp(mpq_denref(q.get_mpq_t()), mpq_denref(q.get_mpq_t()), e - cut);
  return q;
}

LatticePMF point_mass(const Rational& at) { return LatticePMF(at, {Rational(1)}); }

LatticePMF make_walk_pmf(int n) {
  if (n < 1) throw InvalidParameter("walk length must be >= 1");
  auto row = binomial_row(static_cast<unsigned>(n));
  std::vector<Rational> masses;
  masses.reserve(row.size());
  for (const auto& c : row) masses.push_back(dyadic(c, static_cast<unsigned long>(n)));
  return LatticePMF(frac(-n, 2), std::move(masses), 2);
}

LatticePMF make_centered_binomial(int n, const Rational& p) {
  if (n < 1) throw InvalidParameter("binomial n must be >= 1");
  if (sgn(p) <= 0 || p >= 1) throw InvalidParameter("binomial p must lie in (0,1)");
  Rational np = p * n;
  if (np.get_den() != 1) throw InvalidParameter("n*p must be an integer");
  Rational q = 1 - p;
  auto row = binomial_row(static_cast<unsigned>(n));
  std::vector<Rational> masses(row.size());
  // p^j q^(n-j) built from both ends to avoid pow calls per atom.
  std::vector<Rational> pp(row.size()), qq(row.size());
  pp[0] = 1;
  qq[0] = 1;
  for (std::size_t j = 1; j < row.size(); ++j) {
    pp[j] = pp[j - 1] * p;
    qq[j] = qq[j - 1] * q;
  }
  for (std::size_t j = 0; j < row.size(); ++j) masses[j] = Rational(row[j]) * pp[j] * qq[row.size() - 1 - j];
  return LatticePMF(-np, std::move(masses));
}

LatticePMF make_hypergeometric(int n, int k, int s, HypergeoForm form) {
  if (n < 1) throw InvalidParameter("hypergeometric n must be >= 1");
  if (k < 0 || k > n) throw InvalidParameter("hypergeometric k must lie in [0,n]");
  if (std::abs(s) > n || (n - s) % 2 != 0) throw InvalidParameter("s is not a probable value of S_n");
  const int plus = (n + s) / 2, minus = (n - s) / 2;
  const int lo = std::max(0, k - minus), hi = std::min(k, plus);
  BigInt total = binomial(static_cast<unsigned>(n), static_cast<unsigned>(k));
  std::vector<Rational> masses;
  masses.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (int j = lo; j <= hi; ++j) {
    Rational m(binomial(static_cast<unsigned>(plus), static_cast<unsigned>(j)) *
                   binomial(static_cast<unsigned>(minus), static_cast<unsigned>(k - j)),
               total);
    m.canonicalize();
    masses.push_back(std::move(m));
  }
  Rational offset(lo);
  if (form == HypergeoForm::Centered) {
    Rational kp(static_cast<long>(k) * plus, n);
    kp.canonicalize();
    offset -= kp;
  }
  return LatticePMF(offset, std::move(masses));
}

LatticePMF perturb_scale(const LatticePMF& pmf) {
  const std::size_t L = pmf.size();
  std::vector<Rational> g(2 * L + 1);
  for (std::size_t i = 0; i <= L; ++i) {
    Rational left = i < L ? pmf.mass(i) : Rational(0);
    Rational right = i > 0 ? pmf.mass(i - 1) : Rational(0);
    g[2 * i] = (left + right) / 4;
    if (i < L) g[2 * i + 1] = pmf.mass(i) / 2;
  }
  return LatticePMF(2 * pmf.offset() - 1, std::move(g));
}

LatticePMF convolve(const LatticePMF& a, const LatticePMF& b) {
  std::vector<Rational> h(a.size() + b.size() - 1);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) h[i + j] += a.mass(i) * b.mass(j);
  return LatticePMF(a.offset() + b.offset(), std::move(h));
}

LatticePMF shift(const LatticePMF& pmf, const Rational& by) {
  return LatticePMF(pmf.offset() + by, pmf.masses(), pmf.scale());
}

TailTable tail(const LatticePMF& pmf) {
  TailTable t{pmf.offset(), std::vector<Rational>(pmf.size())};
  Rational run;
  for (std::size_t i = pmf.size(); i-- > 0;) {
    run += pmf.mass(i);
    t.values[i] = run;
  }
  return t;
}

Functional make_functional(std::string_view name, std::span<const double> params) {
  auto need = [&](std::size_t k) {
    if (params.size() != k)
      throw InvalidParameter("functional '" + std::string(name) + "' takes " + std::to_string(k) +
                             " parameter(s)");
  };
  if (name == "moment") {
    need(1);
    if (params[0] < 0 || params[0] != std::floor(params[0]))
      throw InvalidParameter("moment order must be a nonnegative integer");
    return functional::Moment{static_cast<unsigned>(params[0])};
  }
  if (name == "abs-exp") {
    need(1);
    return functional::AbsExp{params[0]};
  }
  if (name == "quad-exp") {
    need(3);
    if (params[2] <= 0) throw InvalidParameter("quad-exp needs k > 0");
    return functional::QuadExp{params[0], params[1], params[2]};
  }
  if (name == "indicator-tail") {
    need(1);
    return functional::IndicatorTail{rational_from_double(params[0])};
  }
  throw InvalidParameter("unknown functional '" + std::string(name) + "'");
}

namespace {

template <class F>
double compensated_expectation(const LatticePMF& pmf, F&& value_at) {
  stats::CompensatedSum s;
  for (std::size_t i = 0; i < pmf.size(); ++i)
    s.add(to_long_double(pmf.mass(i)) * value_at(to_long_double(pmf.atom(i))));
  return static_cast<double>(s.value());
}

}  // namespace

Expectation expect(const LatticePMF& pmf, const Functional& f) {
  Expectation out;
  if (auto* m = std::get_if<functional::Moment>(&f)) {
    Rational e;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      Rational x = pmf.atom(i), p(1);
      for (unsigned r = 0; r < m->r; ++r) p *= x;
      e += pmf.mass(i) * p;
    }
    out.exact = e;
    out.value = to_long_double(e);
  } else if (auto* t = std::get_if<functional::IndicatorTail>(&f)) {
    Rational e = tail(pmf).at(t->x);
    out.exact = e;
    out.value = to_long_double(e);
  } else if (auto* a = std::get_if<functional::AbsExp>(&f)) {
    if (a->theta == 0.0) {
      out.exact = Rational(1);
      out.value = 1.0;
    } else {
      long double th = a->theta;
      out.value = compensated_expectation(pmf, [&](long double x) { return std::exp(th * std::fabs(x)); });
    }
  } else if (auto* q = std::get_if<functional::QuadExp>(&f)) {
    if (q->a == 0.0 && q->b == 0.0) {
      out.exact = Rational(1);
      out.value = 1.0;
    } else {
      long double ca = q->a / std::sqrt(static_cast<long double>(q->k));
      long double cb = q->b / static_cast<long double>(q->k);
      out.value = compensated_expectation(pmf, [&](long double x) { return std::exp(ca * x + cb * x * x); });
    }
  }
  return out;
}

std::size_t quantile_index(const LatticePMF& pmf, const Rational& u) {
  if (sgn(u) <= 0 || u >= 1) throw InvalidParameter("quantile level must lie in (0,1)");
  Rational run;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    run += pmf.mass(i);
    if (run >= u) return i;
  }
  return pmf.size() - 1;
}

Rational quantile(const LatticePMF& pmf, const Rational& u) { return pmf.atom(quantile_index(pmf, u)); }

Rational quantile(const LatticePMF& pmf, double u) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidParameter("quantile level must lie in (0,1)");
  return quantile(pmf, rational_from_double(u));
}

std::string to_debug_json(const LatticePMF& pmf) {
  nlohmann::ordered_json j;
  j["offset"] = to_string(pmf.offset());
  auto& arr = j["masses"] = nlohmann::ordered_json::array();
  for (const auto& m : pmf.masses()) arr.push_back(to_string(m));
  return j.dump();
}

}  // namespace kmt
