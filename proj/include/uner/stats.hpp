#pragma once

#include <span>
#include <vector>

namespace uner {

// Neumaier-compensated running sum; order of additions is the caller's.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double mean(std::span<const double> xs);
// Sample standard deviation (divisor n - 1); 0 for fewer than two values.
double stddev(std::span<const double> xs);

// Quantile by linear interpolation between order statistics: with sorted
// values x_0..x_{n-1}, h = (n - 1) prob, result x_floor(h) + (h - floor(h))
// (x_floor(h)+1 - x_floor(h)).
double quantile(std::span<const double> xs, double prob);
double quantile_sorted(std::span<const double> sorted, double prob);

// Monte Carlo standard error of the mean of a possibly autocorrelated
// sequence by non-overlapping batch means (batch count ~ sqrt(n)).
double batch_means_se(std::span<const double> xs);

}  // namespace uner
