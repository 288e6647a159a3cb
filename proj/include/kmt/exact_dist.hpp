#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kmt/rational.hpp"

namespace kmt {

// Exact law on the unit-spaced segment offset, offset+1, ..., offset+size-1.
// Every stored mass is positive and the masses sum to exactly 1.
// scale() is the factor converting atoms back to the original variable (2 for walk laws
// carried on the half lattice); derived laws have scale 1.
class LatticePMF {
 public:
  LatticePMF(Rational offset, std::vector<Rational> masses, int scale = 1);

  const Rational& offset() const { return offset_; }
  std::size_t size() const { return masses_.size(); }
  Rational atom(std::size_t i) const { return offset_ + static_cast<unsigned long>(i); }
  Rational last_atom() const { return atom(size() - 1); }
  const std::vector<Rational>& masses() const { return masses_; }
  const Rational& mass(std::size_t i) const { return masses_[i]; }
  int scale() const { return scale_; }

  std::optional<std::size_t> index_of(const Rational& x) const;
  Rational mass_at(const Rational& x) const;
  Rational mean() const;
  std::vector<Rational> cdf() const;

  bool operator==(const LatticePMF& other) const {
    return offset_ == other.offset_ && masses_ == other.masses_;
  }

 private:
  Rational offset_;
  std::vector<Rational> masses_;
  int scale_ = 1;
};

// Suffix sums: values[i] = P{X >= offset + i}.
struct TailTable {
  Rational offset;
  std::vector<Rational> values;
  const Rational& at_index(std::size_t i) const { return values[i]; }
  Rational at(const Rational& x) const;
};

// num / 2^e in lowest terms.
Rational dyadic(const BigInt& num, unsigned long e);

LatticePMF point_mass(const Rational& at);
LatticePMF make_walk_pmf(int n);
LatticePMF make_centered_binomial(int n, const Rational& p);

enum class HypergeoForm { Hat, Centered };
// Law of the number of +1 coupons among k draws without replacement from a box of n
// coupons summing to s (Hat), or that count minus its mean (Centered).
LatticePMF make_hypergeometric(int n, int k, int s, HypergeoForm form = HypergeoForm::Hat);

LatticePMF perturb_scale(const LatticePMF& pmf);
LatticePMF convolve(const LatticePMF& a, const LatticePMF& b);
LatticePMF shift(const LatticePMF& pmf, const Rational& by);
TailTable tail(const LatticePMF& pmf);

namespace functional {
struct Moment {
  unsigned r;
};
struct AbsExp {
  double theta;
};
// exp((a/sqrt(k)) x + (b/k) x^2)
struct QuadExp {
  double a, b, k;
};
struct IndicatorTail {
  Rational x;
};
}  // namespace functional

using Functional = std::variant<functional::Moment, functional::AbsExp, functional::QuadExp,
                                functional::IndicatorTail>;

Functional make_functional(std::string_view name, std::span<const double> params);

struct Expectation {
  double value = 0.0;
  std::optional<Rational> exact;
};

Expectation expect(const LatticePMF& pmf, const Functional& f);

// Smallest atom whose cumulative mass is >= u.
std::size_t quantile_index(const LatticePMF& pmf, const Rational& u);
Rational quantile(const LatticePMF& pmf, const Rational& u);
Rational quantile(const LatticePMF& pmf, double u);

std::string to_debug_json(const LatticePMF& pmf);

}  // namespace kmt
