#include <algorithm>

#include "kmt/errors.hpp"
#include "kmt/stein_markov.hpp"

namespace kmt::stein {

SteinCoefficient::SteinCoefficient(Rational offset, std::vector<Rational> values)
    : offset_(std::move(offset)), values_(std::move(values)) {
  if (values_.empty()) throw InvalidParameter("Stein coefficient needs a nonempty support");
}

Rational SteinCoefficient::at(const Rational& x) const {
  Rational d = x - offset_;
  if (d.get_den() == 1 && sgn(d) >= 0 && d < static_cast<unsigned long>(values_.size()))
    return values_[d.get_num().get_ui()];
  return abs(x);
}

SteinCoefficient stein_from_pmf(const LatticePMF& pmf) {
  if (sgn(pmf.mean()) != 0) throw InvalidParameter("law has nonzero mean; no Stein coefficient exists");
  const std::size_t L = pmf.size();
  std::vector<Rational> t(L);
  Rational suffix = 0;  // sum_{j > i} alpha(j) j
  for (std::size_t r = L; r-- > 0;) {
    Rational x = pmf.atom(r);
    t[r] = x + 2 * suffix / pmf.mass(r);
    suffix += pmf.mass(r) * x;
  }
  SteinCoefficient out(pmf.offset(), std::move(t));
  if (!valid_pair(out, pmf)) throw ModelViolation("Stein coefficient fails detailed balance");
  return out;
}

bool valid_pair(const SteinCoefficient& t, const LatticePMF& pmf) {
  if (t.size() != pmf.size() || t.offset() != pmf.offset()) return false;
  const std::size_t L = pmf.size();
  if (t.value(0) != -pmf.atom(0) && L > 1) return false;
  if (t.value(L - 1) != pmf.last_atom() && L > 1) return false;
  for (std::size_t i = 0; i < L; ++i) {
    Rational x = pmf.atom(i);
    if (t.value(i) - x < 0 || t.value(i) + x < 0) return false;
  }
  for (std::size_t i = 0; i + 1 < L; ++i) {
    Rational lhs = pmf.mass(i) * (t.value(i) - pmf.atom(i));
    Rational rhs = pmf.mass(i + 1) * (t.value(i + 1) + pmf.atom(i + 1));
    if (lhs != rhs) return false;
  }
  return true;
}

SteinCoefficient stein_binomial(int n, const Rational& p) {
  LatticePMF pmf = make_centered_binomial(n, p);
  Rational q = 1 - p;
  std::vector<Rational> t(pmf.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 2 * p * q * n + (q - p) * pmf.atom(i);
  return SteinCoefficient(pmf.offset(), std::move(t));
}

SteinCoefficient stein_hypergeometric(int n, int k, int s) {
  LatticePMF pmf = make_hypergeometric(n, k, s, HypergeoForm::Centered);
  Rational p(n + s, 2 * n), q(n - s, 2 * n);
  p.canonicalize();
  q.canonicalize();
  Rational spread(static_cast<long>(k) * (n - k), n), tilt(n - 2 * k, n);
  spread.canonicalize();
  tilt.canonicalize();
  Rational var = 2 * p * q * spread;
  Rational lin = (q - p) * tilt;
  std::vector<Rational> t(pmf.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    Rational x = pmf.atom(i);
    t[i] = var + 2 * x * x / n + lin * x;
  }
  return SteinCoefficient(pmf.offset(), std::move(t));
}

SteinCoefficient stein_convolve(const SteinCoefficient& tx, const LatticePMF& px, const SteinCoefficient& ty,
                                const LatticePMF& py) {
  const std::size_t L = px.size() + py.size() - 1;
  std::vector<Rational> num(L), den(L);
  for (std::size_t i = 0; i < px.size(); ++i)
    for (std::size_t j = 0; j < py.size(); ++j) {
      Rational w = px.mass(i) * py.mass(j);
      num[i + j] += w * (tx.value(i) + ty.value(j));
      den[i + j] += w;
    }
  for (std::size_t z = 0; z < L; ++z) num[z] /= den[z];
  return SteinCoefficient(px.offset() + py.offset(), std::move(num));
}

SteinCoefficient stein_scale_perturb(const SteinCoefficient& tx, const LatticePMF& px) {
  const std::size_t L = px.size();
  std::vector<Rational> t(2 * L + 1);
  for (std::size_t i = 0; i < L; ++i) t[2 * i + 1] = 4 * tx.value(i) + 1;
  Rational y0 = 2 * px.offset() - 1;
  t[0] = abs(y0);
  t[2 * L] = abs(y0 + static_cast<unsigned long>(2 * L));
  for (std::size_t i = 1; i < L; ++i) {
    // y = 2x - 1 between atoms x-1 and x
    Rational x = px.atom(i);
    Rational y = 2 * x - 1;
    Rational a = tx.value(i) + x;
    Rational b = tx.value(i - 1) - (x - 1);
    t[2 * i] = (8 * a * b + y * (a - b)) / (a + b);
  }
  return SteinCoefficient(y0, std::move(t));
}

}  // namespace kmt::stein
