#pragma once

#include <vector>

namespace l2e::stats {

// Standard normal quantile (inverse CDF), Wichura's PPND16 algorithm.
// Absolute error below 1e-15 over (0, 1); throws InvalidInput outside.
double normal_quantile(double p);

// Type-7 sample quantile (the piecewise-linear definition used by most
// statistical software): h = (n-1)p, interpolate between order statistics.
// Takes the values by copy and sorts internally.
double quantile_type7(std::vector<double> values, double p);

// Order-statistic medians used when aggregating per-split bounds.
// lower_median: ascending order statistic number ceil(K/2).
// upper_median: ascending order statistic number floor(K/2) + 1.
// For odd K both equal the usual median.
double lower_median(std::vector<double> values);
double upper_median(std::vector<double> values);

double mean(const std::vector<double>& values);

// ddof = 1 gives the unbiased sample variance, ddof = 0 the population one.
double variance(const std::vector<double>& values, int ddof = 1);

}  // namespace l2e::stats
