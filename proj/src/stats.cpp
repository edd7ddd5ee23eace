#include "tarma/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tarma {

double quantile_sorted(std::span<const double> sorted, double p) {
  require(!sorted.empty(), ErrorKind::invalid_argument, "quantile of empty data");
  require(p >= 0.0 && p <= 1.0, ErrorKind::invalid_argument,
          "quantile level outside [0, 1]");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::span<const double> data, double p) {
  std::vector<double> copy(data.begin(), data.end());
  std::sort(copy.begin(), copy.end());
  return quantile_sorted(copy, p);
}

double mean(std::span<const double> data) {
  require(!data.empty(), ErrorKind::invalid_argument, "mean of empty data");
  return std::accumulate(data.begin(), data.end(), 0.0) /
         static_cast<double>(data.size());
}

double sample_variance(std::span<const double> data) {
  require(data.size() >= 2, ErrorKind::invalid_argument,
          "variance needs two observations");
  const double m = mean(data);
  double ss = 0.0;
  for (double v : data) ss += (v - m) * (v - m);
  return ss / static_cast<double>(data.size() - 1);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ecdf_sorted(std::span<const double> sorted, double x) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) /
         static_cast<double>(sorted.size());
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorKind::invalid_argument,
          "KS test on empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = na * nb / (na + nb);
  const double s = std::sqrt(ne);
  return {d, kolmogorov_sf((s + 0.12 + 0.11 / s) * d)};
}

double ks_uniform_distance(std::span<const double> data) {
  std::vector<double> x(data.begin(), data.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, (i + 1) / n - u, u - i / n});
  }
  return d;
}

double binomial_se_pct(double fraction, Index reps) {
  if (reps <= 0) return 0.0;
  return 100.0 * std::sqrt(fraction * (1.0 - fraction) / static_cast<double>(reps));
}

}  // namespace tarma
