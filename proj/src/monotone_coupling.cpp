#include "kmt/monotone_coupling.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <cmath>
#include <limits>
#include <map>

#include "kmt/errors.hpp"
#include "kmt/normal.hpp"
#include "kmt/rng.hpp"

namespace kmt::coupling {

DiscreteLaw::DiscreteLaw(std::vector<Rational> atoms, std::vector<Rational> masses)
    : atoms_(std::move(atoms)), masses_(std::move(masses)) {
  if (atoms_.empty() || atoms_.size() != masses_.size()) throw InvalidParameter("malformed discrete law");
  Rational total;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (i > 0 && atoms_[i] <= atoms_[i - 1]) throw InvalidParameter("atoms must increase strictly");
    if (sgn(masses_[i]) <= 0) throw InvalidParameter("masses must be positive");
    total += masses_[i];
  }
  if (total != 1) throw InvalidParameter("masses must sum to 1");
}

namespace {
std::vector<Rational> lattice_atoms(const LatticePMF& pmf) {
  std::vector<Rational> a(pmf.size());
  for (std::size_t i = 0; i < pmf.size(); ++i) a[i] = pmf.atom(i);
  return a;
}
}  // namespace

DiscreteLaw::DiscreteLaw(const LatticePMF& pmf) : DiscreteLaw(lattice_atoms(pmf), pmf.masses()) {}

DiscreteLaw abs_law(const LatticePMF& pmf, const Rational& factor) {
  std::map<Rational, Rational> acc;
  for (std::size_t i = 0; i < pmf.size(); ++i) acc[abs(Rational(pmf.atom(i) * factor))] += pmf.mass(i);
  std::vector<Rational> atoms, masses;
  for (auto& [x, m] : acc) {
    atoms.push_back(x);
    masses.push_back(m);
  }
  return DiscreteLaw(std::move(atoms), std::move(masses));
}

CouplingTable::CouplingTable(DiscreteLaw rows, DiscreteLaw cols, std::vector<Cell> cells)
    : rows_(std::move(rows)), cols_(std::move(cols)), cells_(std::move(cells)) {
  std::sort(cells_.begin(), cells_.end(), [](const Cell& x, const Cell& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  for (const auto& c : cells_) {
    if (c.row >= rows_.size() || c.col >= cols_.size()) throw InvalidParameter("cell outside the grid");
    if (sgn(c.mass) <= 0) throw InvalidParameter("cell mass must be positive");
  }
}

std::vector<Rational> CouplingTable::row_sums() const {
  std::vector<Rational> s(rows_.size());
  for (const auto& c : cells_) s[c.row] += c.mass;
  return s;
}

std::vector<Rational> CouplingTable::col_sums() const {
  std::vector<Rational> s(cols_.size());
  for (const auto& c : cells_) s[c.col] += c.mass;
  return s;
}

bool CouplingTable::marginals_exact() const {
  return row_sums() == rows_.masses() && col_sums() == cols_.masses();
}

bool CouplingTable::non_crossing() const {
  // cells are sorted by row; columns must then be non-decreasing
  for (std::size_t i = 1; i < cells_.size(); ++i)
    if (cells_[i].col < cells_[i - 1].col) return false;
  return true;
}

void comonotone_merge(std::span<const BigInt> a, std::span<const BigInt> b,
                      const std::function<void(std::size_t, std::size_t, const BigInt&)>& emit) {
  std::size_t i = 0, j = 0;
  BigInt ca = a.empty() ? BigInt(0) : a[0], cb = b.empty() ? BigInt(0) : b[0], cur = 0, overlap;
  while (i < a.size() && j < b.size()) {
    const BigInt& top = ca < cb ? ca : cb;
    overlap = top - cur;
    if (sgn(overlap) > 0) emit(i, j, overlap);
    cur = top;
    bool adv_a = ca == cur, adv_b = cb == cur;
    if (adv_a && ++i < a.size()) ca += a[i];
    if (adv_b && ++j < b.size()) cb += b[j];
  }
}

namespace {

BigInt common_denominator(const DiscreteLaw& a, const DiscreteLaw& b) {
  BigInt d = 1;
  for (const auto* law : {&a, &b})
    for (const auto& m : law->masses()) mpz_lcm(d.get_mpz_t(), d.get_mpz_t(), m.get_den_mpz_t());
  return d;
}

std::vector<BigInt> integer_weights(const DiscreteLaw& law, const BigInt& den) {
  std::vector<BigInt> w(law.size());
  for (std::size_t i = 0; i < law.size(); ++i) w[i] = law.mass(i).get_num() * (den / law.mass(i).get_den());
  return w;
}

}  // namespace

CouplingTable comonotone_couple(const DiscreteLaw& a, const DiscreteLaw& b) {
  BigInt den = common_denominator(a, b);
  auto wa = integer_weights(a, den), wb = integer_weights(b, den);
  std::vector<Cell> cells;
  comonotone_merge(wa, wb, [&](std::size_t i, std::size_t j, const BigInt& w) {
    Rational m(w, den);
    m.canonicalize();
    cells.push_back({i, j, std::move(m)});
  });
  return CouplingTable(a, b, std::move(cells));
}

CouplingTable comonotone_couple(const LatticePMF& a, const LatticePMF& b) {
  return comonotone_couple(DiscreteLaw(a), DiscreteLaw(b));
}

namespace {

// Weights of |S_N| on atoms N%2, N%2+2, ..., N, over the denominator 2^N, times 2^shift.
std::vector<BigInt> abs_walk_weights(long N, unsigned long shift) {
  auto row = binomial_row(static_cast<unsigned>(N));
  std::vector<BigInt> w;
  for (long a = N % 2; a <= N; a += 2) {
    BigInt x = row[static_cast<std::size_t>((N + a) / 2)];
    if (a > 0) x *= 2;
    if (shift) x <<= static_cast<mp_bitcnt_t>(shift);
    w.push_back(std::move(x));
  }
  return w;
}

DiscreteLaw abs_walk_law(long N, long factor, const std::vector<BigInt>& weights, unsigned long log2_den) {
  std::vector<Rational> atoms, masses;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    atoms.emplace_back(factor * (N % 2 + 2 * static_cast<long>(i)));
    masses.push_back(dyadic(weights[i], log2_den));
  }
  return DiscreteLaw(std::move(atoms), std::move(masses));
}

}  // namespace

WalkPairCoupling signed_couple_2s_4s(int n) {
  if (n < 2 || n % 2 != 0) throw InvalidParameter("n must be even and >= 2");
  const long N = n, N4 = 4L * n;
  auto wa = abs_walk_weights(N, 3ul * n);
  auto wb = abs_walk_weights(N4, 0);
  const unsigned long den = 4ul * n;
  std::vector<Cell> cells;
  std::vector<SignedCell> signed_cells;
  BigInt m1 = 0, m2 = 0;
  bool first = true;
  comonotone_merge(wa, wb, [&](std::size_t i, std::size_t j, const BigInt& w) {
    Rational mass = dyadic(w, den);
    long a = 2 * static_cast<long>(i), b = 2 * static_cast<long>(j);
    BigInt c1 = b + 2 - 2 * a;
    BigInt c2 = BigInt(b) * b + 72 * N - 8 * N * std::labs(2 * a - b);
    if (first || c1 < m1) m1 = c1;
    if (first || c2 < m2) m2 = c2;
    first = false;
    if (a == 0 && b == 0) {
      signed_cells.push_back({0, 0, mass});
    } else {
      Rational half = mass / 2;
      signed_cells.push_back({a, b, half});
      signed_cells.push_back({-a, -b, half});
    }
    cells.push_back({i, j, std::move(mass)});
  });
  std::sort(signed_cells.begin(), signed_cells.end(), [](const SignedCell& x, const SignedCell& y) {
    return x.s_n != y.s_n ? x.s_n < y.s_n : x.s_4n < y.s_4n;
  });
  WalkPairCoupling out{n, CouplingTable(abs_walk_law(N, 2, wa, 4ul * n), abs_walk_law(N4, 1, wb, 4ul * n), std::move(cells)),
                       std::move(signed_cells), Rational(m1), Rational(m2, 8 * N), false};
  out.diff_margin.canonicalize();
  out.pass = sgn(out.abs_margin) >= 0 && sgn(out.diff_margin) >= 0;
  return out;
}

WalkPairMargins walk_pair_margins(int n) {
  if (n < 2 || n % 2 != 0) throw InvalidParameter("n must be even and >= 2");
  const long N = n, N4 = 4L * n;
  auto wa = abs_walk_weights(N, 3ul * n);
  auto wb = abs_walk_weights(N4, 0);
  long m1 = std::numeric_limits<long>::max();
  long long m2 = std::numeric_limits<long long>::max();
  long pairs = 0;
  comonotone_merge(wa, wb, [&](std::size_t i, std::size_t j, const BigInt&) {
    long a = 2 * static_cast<long>(i), b = 2 * static_cast<long>(j);
    m1 = std::min(m1, b + 2 - 2 * a);
    m2 = std::min<long long>(m2, static_cast<long long>(b) * b + 72LL * N - 8LL * N * std::labs(2 * a - b));
    ++pairs;
  });
  WalkPairMargins out;
  out.n = n;
  out.abs_margin = m1;
  out.diff_margin = Rational(BigInt(std::to_string(m2)), BigInt(8 * N));
  out.diff_margin.canonicalize();
  out.pairs = pairs;
  out.pass = m1 >= 0 && m2 >= 0;
  return out;
}

namespace {
template <class Row>
std::optional<long> stable_threshold(const std::vector<Row>& rows, long first, long step) {
  // smallest parameter from which every row through the end passes
  std::optional<long> t;
  for (std::size_t i = rows.size(); i-- > 0;) {
    if (!rows[i].pass) break;
    t = first + static_cast<long>(i) * step;
  }
  return t;
}
}  // namespace

WalkPairSweep sweep_walk_pair(int n_max, Exec exec) {
  if (n_max < 2) throw InvalidParameter("n_max must be >= 2");
  WalkPairSweep s;
  s.n_max = n_max;
  s.rows = map_range(exec, 1, n_max / 2 + 1, [](long h) { return walk_pair_margins(static_cast<int>(2 * h)); });
  s.threshold = stable_threshold(s.rows, 2, 2);
  s.pass = s.threshold.has_value();
  return s;
}

QuantileCheckReport gaussian_quantile_check(int n) {
  if (n < 1) throw InvalidParameter("n must be >= 1");
  const long N = n % 2 == 0 ? n : n + 1;
  auto row = binomial_row(static_cast<unsigned>(N));
  std::vector<BigInt> tail(row.size() + 1, BigInt(0));
  for (std::size_t j = row.size(); j-- > 0;) tail[j] = tail[j + 1] + row[j];
  const int e = static_cast<int>(-N);
  auto prob = [&](std::size_t j) { return std::ldexp(to_long_double(tail[j]), e); };
  const long double inf = std::numeric_limits<long double>::infinity();
  // zb[j] = z with P{Z > z} = P{S >= 2j - N}; j runs over the upper half of the support.
  const std::size_t j0 = static_cast<std::size_t>(N / 2);
  std::vector<long double> zb(static_cast<std::size_t>(N) + 2 - j0);
  for (std::size_t j = j0; j <= static_cast<std::size_t>(N) + 1; ++j) {
    long double z;
    if (j > static_cast<std::size_t>(N)) {
      z = inf;
    } else {
      long double q = prob(j);
      // complement P{S < 2j-N} = P{S >= N - 2j + 2}
      z = q <= 0.5L ? normal::upper_quantile_l(q) : -normal::upper_quantile_l(prob(static_cast<std::size_t>(N) + 1 - j));
    }
    zb[j - j0] = z;
  }
  const long double rn = std::sqrt(static_cast<long double>(n));
  QuantileCheckReport r;
  r.n = n;
  long double worst1 = inf, worst2 = inf;
  for (std::size_t j = j0; j <= static_cast<std::size_t>(N); ++j) {
    const long sp = 2 * static_cast<long>(j) - N;
    const long double lo = zb[j - j0], hi = zb[j + 1 - j0];
    long double pts[5];
    int np = 0;
    if (std::isfinite(lo)) pts[np++] = lo;
    if (std::isfinite(hi)) pts[np++] = hi;
    for (long double c : {0.0L, rn / 2, -rn / 2})
      if (lo < c && c < hi) pts[np++] = c;
    long cands[2];
    int nc = 0;
    if (N == n) {
      cands[nc++] = sp;
    } else {
      for (long s : {sp - 1, sp + 1})
        if (std::labs(s) <= n) cands[nc++] = s;
    }
    for (int ci = 0; ci < nc; ++ci) {
      const long double s = static_cast<long double>(cands[ci]);
      for (int pi = 0; pi < np; ++pi) {
        const long double z = pts[pi];
        worst1 = std::min(worst1, std::fabs(z) * rn + 3 - std::fabs(s));
        worst2 = std::min(worst2, z * z + 11 - std::fabs(s - z * rn));
        ++r.points;
      }
    }
  }
  r.abs_margin = static_cast<double>(worst1);
  r.diff_margin = static_cast<double>(worst2);
  r.pass = worst1 >= 0 && worst2 >= 0;
  return r;
}

QuantileSweep sweep_gaussian_quantile(int n_max, Exec exec) {
  if (n_max < 1) throw InvalidParameter("n_max must be >= 1");
  QuantileSweep s;
  s.n_max = n_max;
  s.rows = map_range(exec, 1, n_max + 1, [](long n) { return gaussian_quantile_check(static_cast<int>(n)); });
  s.threshold = stable_threshold(s.rows, 1, 1);
  s.pass = s.threshold.has_value();
  return s;
}

ChainSampler::ChainSampler(int n, int depth, ChainOptions options) : n_(n), depth_(depth), options_(options) {
  if (n < 1) throw InvalidParameter("n must be >= 1");
  if (depth < 1) throw InvalidParameter("depth must be >= 1");
  if (2 * depth + std::log2(static_cast<double>(n)) > 58) throw CapabilityError("walk length overflows 64 bits");
  {
    auto w = abs_walk_weights(n, 0);
    BigInt run = 0;
    for (const auto& x : w) {
      run += x;
      start_cdf_.push_back(std::ldexp(to_long_double(run), -n));
    }
  }
  for (int k = 0; k < depth; ++k) {
    const long long np = static_cast<long long>(n) << (2 * k);
    if (static_cast<std::size_t>(4 * np + 1) > options_.table_limit) {
      if (!options_.allow_fallback)
        throw CapabilityError("exact coupling table for walk length " + std::to_string(4 * np) +
                              " exceeds table_limit and sampling fallback is disabled");
      break;
    }
    auto wa = abs_walk_weights(np, 3ul * static_cast<unsigned long>(np));
    auto wb = abs_walk_weights(4 * np, 0);
    Step step{np, std::vector<Row>(wa.size())};
    std::vector<BigInt> run(wa.size(), BigInt(0));
    comonotone_merge(wa, wb, [&](std::size_t i, std::size_t j, const BigInt& w) {
      run[i] += w;
      step.rows[i].b.push_back(2 * static_cast<long long>(j));
      Rational c(run[i], wa[i]);
      c.canonicalize();
      step.rows[i].cum.push_back(to_long_double(c));
    });
    steps_.push_back(std::move(step));
  }
}

namespace {

// P{|S_N| <= a} in double precision.
double abs_walk_cdf(long long N, long long a) {
  if (a < 0) return 0.0;
  if (a >= N) return 1.0;
  boost::math::binomial_distribution<double> bin(static_cast<double>(N), 0.5);
  double hi = boost::math::cdf(bin, static_cast<double>((N + a) / 2));
  long long lo_k = (N - a) / 2 - 1;
  double lo = lo_k >= 0 ? boost::math::cdf(bin, static_cast<double>(lo_k)) : 0.0;
  return hi - lo;
}

void check_step(long long np, long long a, long long b) {
  using I = __int128;
  bool ok1 = 2 * static_cast<I>(a) <= static_cast<I>(b) + 2;
  I lhs = 8 * static_cast<I>(np) * (2 * static_cast<I>(a) > b ? 2 * static_cast<I>(a) - b : b - 2 * static_cast<I>(a));
  bool ok2 = lhs <= static_cast<I>(b) * b + 72 * static_cast<I>(np);
  if (!ok1 || !ok2)
    throw VerificationFailure("chain step at walk length " + std::to_string(np) + " broke the step bound: |S|=" +
                              std::to_string(a) + ", |S'|=" + std::to_string(b));
}

}  // namespace

ChainTrajectory ChainSampler::sample(std::uint64_t seed, std::uint64_t index) const {
  auto rng = CounterRng::derive(seed, {index});
  ChainTrajectory t;
  t.n = n_;
  t.sign = (rng() >> 63) ? -1 : 1;
  double u = rng.uniform();
  auto it = std::lower_bound(start_cdf_.begin(), start_cdf_.end(), static_cast<long double>(u));
  if (it == start_cdf_.end()) --it;
  long long a = n_ % 2 + 2 * static_cast<long long>(it - start_cdf_.begin());
  t.s.push_back(t.sign * a);
  for (int k = 0; k < depth_; ++k) {
    const long long np = static_cast<long long>(n_) << (2 * k);
    long long b;
    u = rng.uniform();
    if (static_cast<std::size_t>(k) < steps_.size()) {
      const Row& row = steps_[static_cast<std::size_t>(k)].rows[static_cast<std::size_t>((a - np % 2) / 2)];
      auto pos = std::lower_bound(row.cum.begin(), row.cum.end(), static_cast<long double>(u));
      if (pos == row.cum.end()) --pos;
      b = row.b[static_cast<std::size_t>(pos - row.cum.begin())];
      t.exact_step.push_back(true);
    } else {
      double lo = abs_walk_cdf(np, a - 2), hi = abs_walk_cdf(np, a);
      double target = lo + u * (hi - lo);
      long long left = 0, right = 2 * np;  // b = 2 * index
      while (left < right) {
        long long mid = (left + right) / 2;
        if (abs_walk_cdf(4 * np, 2 * mid) >= target)
          right = mid;
        else
          left = mid + 1;
      }
      b = 2 * left;
      t.exact_step.push_back(false);
    }
    check_step(np, a, b);
    t.s.push_back(t.sign * b);
    a = b;
  }
  for (std::size_t k = 0; k < t.s.size(); ++k)
    t.z.push_back(static_cast<double>(t.s[k]) / std::sqrt(static_cast<double>(static_cast<long long>(n_) << (2 * k))));
  return t;
}

ChainTrajectory chain_sample(int n, int depth, std::uint64_t seed, ChainOptions options) {
  return ChainSampler(n, depth, options).sample(seed);
}

}  // namespace kmt::coupling
