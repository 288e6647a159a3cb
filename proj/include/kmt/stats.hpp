#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kmt::stats {

// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(long double x);
  long double value() const { return sum_ + comp_; }

 private:
  long double sum_ = 0.0L;
  long double comp_ = 0.0L;
};

long double sum(std::span<const long double> xs);
double mean(std::span<const double> xs);
double variance(std::span<const double> xs);  // unbiased
double quantile(std::vector<double> xs, double p);

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Pearson chi-square goodness of fit; returns the upper-tail p-value.
double chi_square_p_value(std::span<const double> observed, std::span<const double> expected,
                          int dof);

}  // namespace kmt::stats
