#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace bmap {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

// Sample mean and standard error of the mean (n-1 variance).
inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double m = 0.0, s2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {  // Welford
    ++k;
    const double delta = x - m;
    m += delta / static_cast<double>(k);
    s2 += delta * (x - m);
  }
  out.mean = m;
  out.se = k > 1 ? std::sqrt(s2 / static_cast<double>(k - 1) / static_cast<double>(k)) : 0.0;
  return out;
}

// Linear-interpolation quantile (type 7). NaN for an empty sample.
inline double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

struct Quantiles {
  double q10 = 0.0;
  double median = 0.0;
  double q90 = 0.0;
};

inline Quantiles summary_quantiles(const std::vector<double>& xs) {
  return {quantile(xs, 0.1), quantile(xs, 0.5), quantile(xs, 0.9)};
}

}  // namespace bmap
