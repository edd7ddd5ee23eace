#pragma once

#include <span>
#include <vector>

#include "tarma/common.hpp"

namespace tarma {

/// Type-7 sample quantile (linear interpolation between order statistics) of
/// already sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

/// Type-7 sample quantile; copies and sorts.
double quantile(std::span<const double> data, double p);

double mean(std::span<const double> data);

/// Unbiased sample variance (divisor n - 1).
double sample_variance(std::span<const double> data);

double normal_cdf(double x);

/// Rank of `x` in sorted data as the empirical CDF, i.e. #{v <= x} / n.
double ecdf_sorted(std::span<const double> sorted, double x);

struct KsResult {
  double statistic;
  double pvalue;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov
/// distribution for the p-value.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// One-sample KS distance between data and the Uniform(0, 1) CDF.
double ks_uniform_distance(std::span<const double> data);

/// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_sf(double lambda);

/// Binomial Monte-Carlo standard error of a rejection fraction, in percent.
double binomial_se_pct(double fraction, Index reps);

}  // namespace tarma
