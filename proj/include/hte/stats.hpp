#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hte::stats {

// Arithmetic mean, computed over the values sorted ascending and shifted by
// the smallest one. The result is exact for constant inputs and independent
// of the input order. Throws on empty input.
double mean(std::span<const double> values);

// Population variance (denominator n).
double population_variance(std::span<const double> values);

// Sample standard deviation (denominator n - 1); 0 for fewer than two values.
double sample_sd(std::span<const double> values);

// 1-based rank k of the type-1 (left-continuous inverse) quantile:
// the smallest k with k / n >= tau.
std::size_t type1_rank(std::size_t n, double tau);

// Type-1 quantile of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double tau);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Percentile interval (type-1 quantiles at (1-level)/2 and (1+level)/2).
Interval percentile_interval(std::vector<double> values, double level = 0.95);

}  // namespace hte::stats
