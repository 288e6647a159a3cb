#include "kmt/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "kmt/errors.hpp"
#include "kmt/normal.hpp"
#include "kmt/rng.hpp"

namespace kmt {

double CounterRng::normal() { return normal::quantile(uniform()); }

std::uint64_t CounterRng::below(std::uint64_t bound) {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = (*this)();
  unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < bound) {
    std::uint64_t t = -bound % bound;
    while (lo < t) {
      x = (*this)();
      m = static_cast<unsigned __int128>(x) * bound;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

namespace stats {

void CompensatedSum::add(long double x) {
  long double t = sum_ + x;
  if (std::fabs(sum_) >= std::fabs(x))
    comp_ += (sum_ - t) + x;
  else
    comp_ += (x - t) + sum_;
  sum_ = t;
}

long double sum(std::span<const long double> xs) {
  CompensatedSum s;
  for (long double x : xs) s.add(x);
  return s.value();
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return static_cast<double>(s.value() / static_cast<long double>(xs.size()));
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  CompensatedSum s;
  for (double x : xs) s.add(static_cast<long double>(x - m) * (x - m));
  return static_cast<double>(s.value() / static_cast<long double>(xs.size() - 1));
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  double pos = p * static_cast<double>(xs.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, xs.size() - 1);
  double w = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - w) + xs[hi] * w;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidParameter("fit needs >= 2 points");
  double mx = mean(x), my = mean(y);
  long double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    long double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LinearFit f;
  f.slope = sxx > 0 ? static_cast<double>(sxy / sxx) : 0.0;
  f.intercept = my - f.slope * mx;
  f.r2 = (sxx > 0 && syy > 0) ? static_cast<double>(sxy * sxy / (sxx * syy)) : 1.0;
  return f;
}

double chi_square_p_value(std::span<const double> observed, std::span<const double> expected,
                          int dof) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  boost::math::chi_squared_distribution<double> chi(dof);
  return boost::math::cdf(boost::math::complement(chi, stat));
}

}  // namespace stats
}  // namespace kmt
