#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kmt {

using BigInt = mpz_class;
using Rational = mpq_class;

// Canonical "p/q" text ("p" when q == 1).
std::string to_string(const Rational& q);
std::string to_string(const BigInt& z);
Rational parse_rational(std::string_view text);

// Exact value of a finite double.
Rational rational_from_double(double x);

// Extended-range conversions; safe for values far below DBL_MIN.
long double to_long_double(const BigInt& z);
long double to_long_double(const Rational& q);
// log of a positive integer.
long double log_of(const BigInt& z);

// num/den in lowest terms.
Rational frac(long num, long den);
Rational pow2(long e);

BigInt binomial(unsigned n, unsigned k);
// C(n,0..n) by the multiplicative recurrence.
std::vector<BigInt> binomial_row(unsigned n);

}  // namespace kmt
