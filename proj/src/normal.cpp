#include "kmt/normal.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numbers>

#include "kmt/errors.hpp"

namespace kmt::normal {

namespace {
const boost::math::normal_distribution<double> kStd;
constexpr long double kInvSqrt2 = 0.707106781186547524400844362104849039L;
constexpr long double kLogSqrt2Pi = 0.918938533204672741780329736405617640L;
}  // namespace

double cdf(double x) { return 0.5 * std::erfc(-x * static_cast<double>(kInvSqrt2)); }

double sf(double x) { return 0.5 * std::erfc(x * static_cast<double>(kInvSqrt2)); }

double quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw InvalidParameter("normal quantile needs u in (0,1)");
  return boost::math::quantile(kStd, u);
}

long double sf_l(long double x) { return 0.5L * std::erfc(x * kInvSqrt2); }

long double log_sf_l(long double x) {
  if (x < 30.0L) return std::log(sf_l(x));
  // Asymptotic series for the Mills ratio; the continued fraction would also do.
  long double x2 = x * x, term = 1.0L, sum = 1.0L;
  for (int k = 1; k < 12; ++k) {
    term *= -static_cast<long double>(2 * k - 1) / x2;
    sum += term;
  }
  return -0.5L * x2 - std::log(x) - kLogSqrt2Pi + std::log(sum);
}

long double upper_quantile_l(long double q) {
  if (!(q > 0.0L && q < 1.0L)) throw InvalidParameter("upper quantile needs q in (0,1)");
  if (q > 0.5L) return -upper_quantile_l(1.0L - q);
  if (q == 0.5L) return 0.0L;
  long double z;
  if (q > 1e-300L) {
    z = boost::math::quantile(boost::math::complement(kStd, static_cast<double>(q)));
  } else {
    long double L = -std::log(q);
    z = std::sqrt(2.0L * L - std::log(4.0L * std::numbers::pi_v<long double> * L));
  }
  const long double lq = std::log(q);
  for (int it = 0; it < 60; ++it) {
    long double ls = log_sf_l(z);
    long double log_pdf = -0.5L * z * z - kLogSqrt2Pi;
    // d/dz log sf = -pdf/sf
    long double step = (ls - lq) / std::exp(log_pdf - ls);
    z += step;
    if (std::fabs(step) <= 1e-19L * std::fmax(1.0L, std::fabs(z))) break;
  }
  return z;
}

}  // namespace kmt::normal
