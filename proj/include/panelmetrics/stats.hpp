#pragma once

#include <string>

namespace pm::stats {

double normal_cdf(double z);
/// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);
/// Two-sided p-value of a Student-t statistic.
double t_two_sided_p(double t, double df);
/// Upper-tail chi-square probability.
double chi2_upper_p(double x, double df);
double t_quantile(double p, double df);

/// Fixed-point decimal rendering, rounded half away from zero on the
/// shortest round-trip decimal expansion of `value`.
std::string round_fixed(double value, int decimals);

}  // namespace pm::stats
