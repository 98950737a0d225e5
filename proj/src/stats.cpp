#include "hte/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hte::stats {

double mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double base = sorted.front();
  double acc = 0.0;
  for (double v : sorted) acc += v - base;
  return base + acc / static_cast<double>(sorted.size());
}

double population_variance(std::span<const double> values) {
  const double m = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return acc / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

std::size_t type1_rank(std::size_t n, double tau) {
  if (n == 0) throw std::invalid_argument("quantile of an empty sample");
  const double nd = static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::clamp(std::ceil(nd * tau), 1.0, nd));
  // k / n >= tau must hold and (k - 1) / n >= tau must not; fix rounding in n * tau.
  while (k > 1 && static_cast<double>(k - 1) / nd >= tau) --k;
  while (k < n && static_cast<double>(k) / nd < tau) ++k;
  return k;
}

double quantile_sorted(std::span<const double> sorted, double tau) {
  return sorted[type1_rank(sorted.size(), tau) - 1];
}

Interval percentile_interval(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("percentile interval of an empty sample");
  std::sort(values.begin(), values.end());
  const double alpha = (1.0 - level) / 2.0;
  return {quantile_sorted(values, alpha), quantile_sorted(values, 1.0 - alpha)};
}

}  // namespace hte::stats
