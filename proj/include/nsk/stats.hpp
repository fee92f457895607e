#ifndef NSK_STATS_HPP
#define NSK_STATS_HPP

#include <utility>
#include <vector>

namespace nsk {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool r_squared_valid = false;  // needs >= 3 points
};

// Mean squared deviation from target. Throws input_error on empty input.
double mse_vs_target(const std::vector<double>& samples, double target);

// Ordinary least squares on (log x, log y). All inputs must be positive.
SlopeFit loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys);

struct KsResult {
  double stat;
  double critical_01;  // asymptotic alpha = 0.01 critical value 1.628/sqrt(R)
  bool pass;
};

// One-sample Kolmogorov-Smirnov statistic against N(0, variance).
KsResult ks_statistic(const std::vector<double>& samples, double variance);

// Sorted samples against Gaussian quantiles at plotting positions (i-0.5)/R.
std::vector<std::pair<double, double>> qq_points(const std::vector<double>& samples,
                                                 double variance);

// Exact empirical 1-d Wasserstein-1 for equal counts (mean |sorted diff|);
// the larger multiset is interpolated onto the smaller's quantiles otherwise.
double wasserstein1_1d(const std::vector<double>& a, const std::vector<double>& b);

double normal_cdf(double z);
double normal_quantile(double p);

}  // namespace nsk

#endif
