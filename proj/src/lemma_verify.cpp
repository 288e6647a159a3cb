#include "kmt/lemma_verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kmt/errors.hpp"
#include "kmt/exact_dist.hpp"

namespace kmt::lemmas {

AlphaBetaTable::AlphaBetaTable(int m) : m_(m) {
  if (m < 1) throw InvalidParameter("m must be >= 1");
  const auto um = static_cast<unsigned>(m);
  auto row2 = binomial_row(2 * um);
  auto row8 = binomial_row(8 * um);
  auto row9 = binomial_row(8 * um + 1);
  alpha_.resize(um + 1);
  for (unsigned k = 0; k <= um; ++k) alpha_[k] = row2[um + k] << (6 * um);
  beta_.resize(2 * um + 1);
  for (unsigned k = 0; k <= 2 * um; ++k) {
    beta_[k] = row9[4 * um + 2 * k];
    if (row8[4 * um + 2 * k] + row8[4 * um + 2 * k - 1] != beta_[k]) pascal_ok_ = false;
  }
  alpha_tail_.assign(um + 2, BigInt(0));
  for (unsigned k = um + 1; k-- > 0;) alpha_tail_[k] = alpha_tail_[k + 1] + alpha_[k];
  beta_tail_.assign(2 * um + 2, BigInt(0));
  for (unsigned k = 2 * um + 1; k-- > 0;) beta_tail_[k] = beta_tail_[k + 1] + beta_[k];
}

Rational AlphaBetaTable::alpha(int k) const { return dyadic(alpha_num(k), log2_denominator()); }
Rational AlphaBetaTable::beta(int k) const { return dyadic(beta_num(k), log2_denominator()); }
Rational AlphaBetaTable::alpha_tail(int k) const { return dyadic(alpha_tail_num(k), log2_denominator()); }
Rational AlphaBetaTable::beta_tail(int k) const { return dyadic(beta_tail_num(k), log2_denominator()); }

AlphaBetaTable alpha_beta_tables(int m) { return AlphaBetaTable(m); }

void LemmaReport::finalize() {
  pass = violations.empty();
  worst_margin = std::numeric_limits<double>::infinity();
  checks = 0;
  for (const auto& r : rows) {
    checks += r.checks;
    if (r.checks > 0) worst_margin = std::min(worst_margin, r.worst_margin);
  }
  if (!std::isfinite(worst_margin)) worst_margin = 0.0;
}

namespace {

// Relative slack of lhs <= rhs, i.e. 1 - lhs/rhs (rhs > 0).
double rel_margin_le(const BigInt& lhs, const BigInt& rhs) {
  if (rhs == 0) return lhs == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return static_cast<double>(1.0L - to_long_double(lhs) / to_long_double(rhs));
}

struct Accumulator {
  SummaryRow row;
  std::vector<Violation> violations;
  bool first = true;

  void margin(double m) {
    row.worst_margin = first ? m : std::min(row.worst_margin, m);
    first = false;
    ++row.checks;
  }
  // Records lhs <= rhs (both numerators over the same denominator).
  void le(const char* check, long m, long k, long l, const BigInt& lhs, const BigInt& rhs,
          unsigned long log2_den) {
    margin(rel_margin_le(lhs, rhs));
    if (lhs > rhs) {
      row.pass = false;
      violations.push_back({check, m, k, l, to_string(dyadic(lhs, log2_den)), "<=",
                            to_string(dyadic(rhs, log2_den))});
    }
  }
  void absorb(Accumulator&& other) {
    if (other.row.checks > 0) {
      row.worst_margin = first ? other.row.worst_margin : std::min(row.worst_margin, other.row.worst_margin);
      first = false;
    }
    row.checks += other.row.checks;
    row.pass = row.pass && other.row.pass;
    for (auto& v : other.violations) violations.push_back(std::move(v));
  }
  void le_rational(const char* check, long m, long k, long l, const Rational& lhs, const Rational& rhs) {
    margin(static_cast<double>(1.0L - to_long_double(lhs) / to_long_double(rhs)));
    if (lhs > rhs) {
      row.pass = false;
      violations.push_back({check, m, k, l, to_string(lhs), "<=", to_string(rhs)});
    }
  }
};

LemmaReport merge(std::string id, std::vector<Accumulator> parts) {
  LemmaReport r;
  r.id = std::move(id);
  for (auto& p : parts) {
    r.rows.push_back(p.row);
    for (auto& v : p.violations) r.violations.push_back(std::move(v));
  }
  r.finalize();
  return r;
}

}  // namespace

LemmaReport check_mass_domination(int m_max, Exec exec) {
  if (m_max < 1) throw InvalidParameter("m_max must be >= 1");
  auto parts = map_range(exec, 1, m_max + 1, [](long m) {
    AlphaBetaTable t(static_cast<int>(m));
    Accumulator acc;
    acc.row.param = m;
    if (!t.pascal_identity_holds()) {
      acc.row.pass = false;
      acc.violations.push_back({"pascal", m, 0, 0, "", "==", ""});
    }
    for (int k = 1; k <= m; ++k)
      acc.le("alpha<=beta", m, k, k, t.alpha_num(k), t.beta_num(k), t.log2_denominator());
    return acc;
  });
  auto r = merge("mass-domination", std::move(parts));
  r.params = {{"m_max", m_max}};
  return r;
}

LemmaReport check_shifted_domination(int m_max, Exec exec) {
  if (m_max < 1) throw InvalidParameter("m_max must be >= 1");
  auto parts = map_range(exec, 1, m_max + 1, [](long m) {
    AlphaBetaTable t(static_cast<int>(m));
    Accumulator acc;
    acc.row.param = m;
    const BigInt m2 = BigInt(m) * m;
    for (long l = 1; l <= 2 * m; ++l) {
      // admissible k: 4 k m^2 <= 4 l m^2 - m^2 - l^3
      BigInt budget = 4 * l * m2 - m2 - BigInt(l) * l * l;
      for (long k = 1; k <= m; ++k) {
        if (BigInt(4 * k) * m2 > budget) break;
        acc.le("beta(l)<=alpha(k)", m, k, l, t.beta_num(static_cast<int>(l)), t.alpha_num(static_cast<int>(k)),
               t.log2_denominator());
      }
    }
    return acc;
  });
  // Neighbouring-index corollary, counted separately.
  auto corollary = map_range(exec, 1, m_max + 1, [](long m) {
    AlphaBetaTable t(static_cast<int>(m));
    Accumulator acc;
    acc.row.param = m;
    for (long l = 2; l <= m + 1 && l * l * l <= 3 * m * m; ++l)
      acc.le("beta(l)<=alpha(l-1)", m, l - 1, l, t.beta_num(static_cast<int>(l)),
             t.alpha_num(static_cast<int>(l - 1)), t.log2_denominator());
    return acc;
  });
  long corollary_checks = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    corollary_checks += corollary[i].row.checks;
    parts[i].absorb(std::move(corollary[i]));
  }
  auto r = merge("shifted-domination", std::move(parts));
  r.params = {{"m_max", m_max}};
  r.values = {{"neighbour_checks", static_cast<double>(corollary_checks)}};
  return r;
}

LemmaReport check_ratio_monotonicity(int m_max, int h_max, Exec exec) {
  if (m_max < 2) throw InvalidParameter("m_max must be >= 2");
  if (h_max < 1) throw InvalidParameter("h_max must be >= 1");
  // f(m,k) = beta(k)/alpha(k), g_h(m,k) = beta(k)/alpha(k-h); cross-multiplied integer tests.
  auto parts = map_range(exec, 1, m_max + 1, [h_max](long m) {
    AlphaBetaTable t(static_cast<int>(m));
    Accumulator acc;
    acc.row.param = m;
    const auto& a = [&](long k) -> const BigInt& { return t.alpha_num(static_cast<int>(k)); };
    const auto& b = [&](long k) -> const BigInt& { return t.beta_num(static_cast<int>(k)); };
    for (long k = 1; k + 1 <= m; ++k)  // f(m,k) <= f(m,k+1)
      acc.le("f(m,k)<=f(m,k+1)", m, k, k + 1, BigInt(b(k) * a(k + 1)), BigInt(b(k + 1) * a(k)), 0);
    for (long h = 1; h <= h_max; ++h)
      for (long k = h + 1; k + 1 <= m && k * k * k <= (4 * h - 1) * m * m; ++k)  // g_h(m,k+1) <= g_h(m,k)
        acc.le("g(m,k+1)<=g(m,k)", m, k, h, BigInt(b(k + 1) * a(k - h)), BigInt(b(k) * a(k + 1 - h)), 0);
    return acc;
  });
  // Steps in m compare across tables.
  auto f1 = [](const AlphaBetaTable& t) -> Rational { return t.beta(1) / t.alpha(1); };
  auto steps = map_range(exec, 1, m_max, [h_max, &f1](long m) {
    AlphaBetaTable lo(static_cast<int>(m)), hi(static_cast<int>(m + 1));
    Accumulator acc;
    acc.row.param = m;
    acc.le_rational("f(m+1,1)<=f(m,1)", m, 1, 0, f1(hi), f1(lo));
    for (long h = 1; h <= h_max && h + 1 <= m; ++h) {
      int k = static_cast<int>(h + 1);
      Rational g_lo = lo.beta(k) / lo.alpha(1), g_hi = hi.beta(k) / hi.alpha(1);
      acc.le_rational("g(m,h+1)<=g(m+1,h+1)", m, k, h, g_lo, g_hi);
    }
    return acc;
  });
  for (std::size_t i = 0; i < steps.size(); ++i) parts[i].absorb(std::move(steps[i]));
  auto r = merge("ratio-monotonicity", std::move(parts));
  r.params = {{"m_max", m_max}, {"h_max", h_max}};
  for (int m : {1, 2, 3, 5, 10}) {
    if (m > m_max) break;
    AlphaBetaTable t(m);
    r.values.emplace_back("f(" + std::to_string(m) + ",1)", static_cast<double>(to_long_double(f1(t))));
  }
  return r;
}

LemmaReport check_tail_domination(int m_max, Exec exec) {
  if (m_max < 1) throw InvalidParameter("m_max must be >= 1");
  struct PerM {
    Accumulator part1, part2;
  };
  auto per = map_range(exec, 1, m_max + 1, [](long m) {
    AlphaBetaTable t(static_cast<int>(m));
    PerM out;
    out.part1.row.param = out.part2.row.param = m;
    for (long k = 1; k <= m; ++k)
      out.part1.le("tail:alpha<=beta", m, k, k, t.alpha_tail_num(static_cast<int>(k)),
                   t.beta_tail_num(static_cast<int>(k)), t.log2_denominator());
    // part 2: 4mk <= 4ml - l^2 - 4m
    for (long l = 1; l <= 2 * m; ++l) {
      long budget = 4 * m * l - l * l - 4 * m;
      for (long k = 1; k <= m && 4 * m * k <= budget; ++k)
        out.part2.le("tail:beta(l)<=alpha(k)", m, k, l, t.beta_tail_num(static_cast<int>(l)),
                     t.alpha_tail_num(static_cast<int>(k)), t.log2_denominator());
    }
    return out;
  });
  LemmaReport r;
  r.id = "tail-domination";
  r.params = {{"m_max", m_max}};
  // Threshold: smallest m0 with a clean part 2 for every m in [m0, m_max].
  long m0 = m_max + 1;
  while (m0 > 1 && per[static_cast<std::size_t>(m0 - 2)].part2.row.pass) --m0;
  if (m0 <= m_max) {
    r.threshold = m0;
    r.threshold_even = m0 % 2 == 0 ? m0 : m0 + 1;
    if (*r.threshold_even > m_max) r.threshold_even.reset();
  }
  long part1_checks = 0, part2_checks = 0;
  for (auto& p : per) {
    SummaryRow row;
    row.param = p.part1.row.param;
    row.checks = p.part1.row.checks + p.part2.row.checks;
    row.worst_margin = p.part1.row.worst_margin;
    if (p.part2.row.checks > 0)
      row.worst_margin = p.part1.row.checks > 0 ? std::min(row.worst_margin, p.part2.row.worst_margin)
                                                : p.part2.row.worst_margin;
    bool asserted = r.threshold && row.param >= *r.threshold;
    row.pass = p.part1.row.pass && (p.part2.row.pass || !asserted);
    part1_checks += p.part1.row.checks;
    part2_checks += p.part2.row.checks;
    for (auto& v : p.part1.violations) r.violations.push_back(std::move(v));
    for (auto& v : p.part2.violations)
      (asserted || !r.threshold ? r.violations : r.below_threshold).push_back(std::move(v));
    r.rows.push_back(row);
  }
  r.finalize();
  r.values = {{"part1_checks", static_cast<double>(part1_checks)},
              {"part2_checks", static_cast<double>(part2_checks)}};
  return r;
}

long double bernoulli_divergence(long double x) {
  x = std::fabs(x);
  if (x < 0.125L) {
    // sum_j x^(2j) / (2j(2j-1))
    long double x2 = x * x, p = x2, s = 0.0L;
    for (int j = 1; j < 40; ++j) {
      long double term = p / static_cast<long double>(2 * j * (2 * j - 1));
      s += term;
      if (term < 1e-24L * s) break;
      p *= x2;
    }
    return s;
  }
  long double hi = 0.5L * (1 + x) * std::log1p(x);
  long double lo = x < 1.0L ? 0.5L * (1 - x) * std::log1p(-x) : 0.0L;
  return hi + lo;
}

long double entropy_gap(long double t) {
  long double s = 2 * t - t * t;
  return 4 * bernoulli_divergence(t) - bernoulli_divergence(s);
}

LemmaReport check_entropy_bound(int grid_size, Exec exec) {
  if (grid_size < 2) throw InvalidParameter("grid size must be >= 2");
  constexpr long double kGuard = -1e-12L;
  auto parts = map_range(exec, 1, grid_size + 1, [grid_size](long j) {
    long double t = static_cast<long double>(j) / grid_size;
    long double gap = entropy_gap(t) - 1.5L * t * t * t;
    Accumulator acc;
    acc.row.param = j;
    acc.margin(static_cast<double>(gap));
    if (gap < kGuard) {
      acc.row.pass = false;
      acc.violations.push_back({"Q(t)>=1.5t^3", j, grid_size, 0, std::to_string(static_cast<double>(entropy_gap(t))),
                                ">=", std::to_string(static_cast<double>(1.5L * t * t * t))});
    }
    return acc;
  });
  auto r = merge("entropy-bound", std::move(parts));
  r.params = {{"grid", grid_size}};
  r.values = {{"Q(0)", 0.0},
              {"Q(0.5)", static_cast<double>(entropy_gap(0.5L))},
              {"Q(1)", static_cast<double>(entropy_gap(1.0L))}};
  return r;
}

LemmaReport check_ash_sandwich(int n_max, Exec exec) {
  if (n_max < 2) throw InvalidParameter("n_max must be >= 2");
  constexpr long double kSlack = 1e-12L;
  const long double A = 1.0L / std::sqrt(8.0L);
  const long double B = 1.0L / std::sqrt(2.0L * 3.14159265358979323846264338327950288L);
  auto parts = map_range(exec, 2, n_max + 1, [&](long n) {
    auto row = binomial_row(static_cast<unsigned>(n));
    std::vector<BigInt> suffix(row.size() + 1, BigInt(0));
    for (std::size_t j = row.size(); j-- > 0;) suffix[j] = suffix[j + 1] + row[j];
    Accumulator acc;
    acc.row.param = n;
    const long double pow2n = std::ldexp(1.0L, static_cast<int>(-n));
    for (long k = 1; k <= n - 1; ++k) {
      long double x = 2.0L * k / n - 1.0L;
      long double e = std::exp(-n * bernoulli_divergence(x));
      long double shape = std::sqrt(static_cast<long double>(n) / (static_cast<long double>(k) * (n - k))) * e;
      long double point = to_long_double(row[static_cast<std::size_t>(k)]) * pow2n;
      long double lower = A * shape, upper = B * shape;
      acc.margin(static_cast<double>(std::min(point / lower - 1, 1 - point / upper)));
      if (point < lower * (1 - kSlack) || point > upper * (1 + kSlack)) {
        acc.row.pass = false;
        acc.violations.push_back({"pointwise", n, k, 0, to_string(dyadic(row[static_cast<std::size_t>(k)], static_cast<unsigned long>(n))),
                                  "in", std::to_string(static_cast<double>(lower)) + ".." + std::to_string(static_cast<double>(upper))});
      }
      if (2 * k > n) {
        long double tl = to_long_double(suffix[static_cast<std::size_t>(k)]) * pow2n;
        acc.margin(static_cast<double>(std::min(tl / lower - 1, 1 - tl / e)));
        if (tl < lower * (1 - kSlack) || tl > e * (1 + kSlack)) {
          acc.row.pass = false;
          acc.violations.push_back({"tail", n, k, 0, to_string(dyadic(suffix[static_cast<std::size_t>(k)], static_cast<unsigned long>(n))),
                                    "in", std::to_string(static_cast<double>(lower)) + ".." + std::to_string(static_cast<double>(e))});
        }
      }
    }
    return acc;
  });
  auto r = merge("ash-sandwich", std::move(parts));
  r.params = {{"n_max", n_max}};
  return r;
}

}  // namespace kmt::lemmas
