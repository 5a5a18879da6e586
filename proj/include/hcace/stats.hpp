#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hcace::stats {

// Standard normal CDF.
double normal_cdf(double x);

// Inverse standard normal CDF (Wichura's PPND16, ~1e-15 relative accuracy).
// p must lie in (0, 1); returns -inf/+inf at the endpoints.
double normal_quantile(double p);

// Two-sided tail probability of |Z| >= |z| for standard normal Z.
double two_sided_p(double z);

double mean(std::span<const double> xs);

// Unbiased sample variance (n - 1 denominator); 0 for n < 2.
double sample_variance(std::span<const double> xs);

// Kolmogorov-Smirnov distance between a sample and Uniform(0,1).
// The sample is copied and sorted internally.
double ks_distance_uniform(std::span<const double> sample);

// Asymptotic two-sided KS p-value for sample size n and distance d
// (Kolmogorov distribution with the small-sample correction of Stephens).
double ks_pvalue(std::size_t n, double d);

// Average ranks (1-based, ties share the mean rank).
std::vector<double> average_ranks(std::span<const double> xs);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> xs, std::span<const double> ys);

}  // namespace hcace::stats
