#include "kmt/rational.hpp"

#include <cmath>

#include "kmt/errors.hpp"

namespace kmt {

std::string to_string(const Rational& q) { return q.get_str(); }

std::string to_string(const BigInt& z) { return z.get_str(); }

Rational parse_rational(std::string_view text) {
  Rational q;
  std::string s(text);
  if (s.empty() || q.set_str(s, 10) != 0 || q.get_den() == 0)
    throw InvalidParameter("not a rational: '" + s + "'");
  q.canonicalize();
  return q;
}

Rational rational_from_double(double x) {
  if (!std::isfinite(x)) throw InvalidParameter("non-finite value");
  Rational q;
  mpq_set_d(q.get_mpq_t(), x);
  return q;
}

namespace {

// Mantissa in [0.5,1) and binary exponent, 64 significant bits.
long double split(const BigInt& z, long& exp2) {
  std::size_t bits = mpz_sizeinbase(z.get_mpz_t(), 2);
  BigInt a = abs(z);
  BigInt top = bits > 64 ? BigInt(a >> static_cast<mp_bitcnt_t>(bits - 64))
                         : BigInt(a << static_cast<mp_bitcnt_t>(64 - bits));
  unsigned long long v = 0;
  mpz_export(&v, nullptr, -1, sizeof v, 0, 0, top.get_mpz_t());
  exp2 = static_cast<long>(bits);
  return std::ldexp(static_cast<long double>(v), -64);
}

}  // namespace

long double to_long_double(const BigInt& z) {
  if (z == 0) return 0.0L;
  long e = 0;
  long double mant = split(z, e);
  long double r = std::ldexp(mant, static_cast<int>(e));
  return sgn(z) < 0 ? -r : r;
}

long double to_long_double(const Rational& q) {
  if (q == 0) return 0.0L;
  long en = 0, ed = 0;
  long double mn = split(q.get_num(), en);
  long double md = split(q.get_den(), ed);
  long double r = std::ldexp(mn / md, static_cast<int>(en - ed));
  return sgn(q) < 0 ? -r : r;
}

long double log_of(const BigInt& z) {
  if (z <= 0) throw InvalidParameter("log of non-positive integer");
  long e = 0;
  long double m = split(z, e);
  return std::log(m) + static_cast<long double>(e) * std::log(2.0L);
}

Rational pow2(long e) {
  Rational r(1);
  if (e >= 0)
    mpq_mul_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
  else
    mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
  return r;
}

BigInt binomial(unsigned n, unsigned k) {
  BigInt r;
  if (k > n) return r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

std::vector<BigInt> binomial_row(unsigned n) {
  std::vector<BigInt> row(n + 1);
  row[0] = 1;
  for (unsigned j = 0; j < n; ++j) {
    row[j + 1] = row[j] * (n - j);
    mpz_divexact_ui(row[j + 1].get_mpz_t(), row[j + 1].get_mpz_t(), j + 1);
  }
  return row;
}

Rational frac(long num, long den) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

}  // namespace kmt
