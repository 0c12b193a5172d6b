#pragma once

#include <span>
#include <vector>

namespace cte {

double mean_of(std::span<const double> v);
double sample_variance(std::span<const double> v);  // unbiased, n-1

// Median and quartiles by linear interpolation.
double quantile(std::vector<double> v, double q);

// Sample Pearson correlation. Throws std::invalid_argument on length < 2 or
// zero variance in either argument.
double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of average ranks (ties share the mean rank).
double spearman(std::span<const double> x, std::span<const double> y);

// Two-sided Welch unequal-variance t-test p-value, with Welch-Satterthwaite
// degrees of freedom. Throws std::invalid_argument when both variances
// vanish or either list has fewer than two entries.
double welch_p_value(std::span<const double> a, std::span<const double> b);

// Regularized incomplete beta function I_x(a, b); the t-distribution tail is
// evaluated through it.
double regularized_incomplete_beta(double a, double b, double x);

std::vector<double> average_ranks(std::span<const double> v);

}  // namespace cte
