#pragma once

namespace kmt::normal {

double cdf(double x);
// Upper tail P{Z > x}, accurate far into the tail.
double sf(double x);
// Inverse CDF; u must lie in (0,1).
double quantile(double u);

long double sf_l(long double x);
long double log_sf_l(long double x);
// z with P{Z > z} = q, for q in (0,1); long double accuracy down to ~1e-4900.
long double upper_quantile_l(long double q);

}  // namespace kmt::normal
