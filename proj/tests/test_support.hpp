#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "concur/rng.hpp"

namespace testing {

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double std_error(const std::vector<double>& v) {
  return std::sqrt(variance(v) / static_cast<double>(v.size()));
}

inline double binomial_se(double p, std::size_t n) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

// One-sample Kolmogorov-Smirnov statistic of `x` against `cdf`.
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf&& cdf) {
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

// Critical KS value at the 1% level.
inline double ks_critical_01(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

}  // namespace testing
