#include "nsk/stats.hpp"

#include <algorithm>
#include <cmath>

#include "nsk/errors.hpp"

namespace nsk {

double mse_vs_target(const std::vector<double>& samples, double target) {
  if (samples.empty()) throw input_error("mse_vs_target: empty input");
  double acc = 0.0;
  for (double s : samples) {
    const double d = s - target;
    acc += d * d;
  }
  return acc / samples.size();
}

SlopeFit loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw input_error("loglog_slope: need >= 2 matching points");
  const std::size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (xs[i] <= 0.0 || ys[i] <= 0.0) throw input_error("loglog_slope: inputs must be positive");
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw input_error("loglog_slope: degenerate abscissae");
  SlopeFit fit;
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  if (n >= 3) {
    const double ss_tot = syy - sy * sy / n;
    const double ss_res = ss_tot - fit.slope * (sxy - sx * sy / n);
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.r_squared_valid = true;
  }
  return fit;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

namespace {

// Acklam's rational approximation, then one Halley refinement step.
double quantile_acklam(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, x;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  return x;
}

}  // namespace

double normal_quantile(double p) {
  if (p <= 0.0 || p >= 1.0) throw input_error("normal_quantile: p must be in (0, 1)");
  double x = quantile_acklam(p);
  // Halley step against the exact cdf
  const double e = normal_cdf(x) - p;
  const double u = e * 2.50662827463100050242 * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

KsResult ks_statistic(const std::vector<double>& samples, double variance) {
  if (samples.size() < 20) throw input_error("ks_statistic: need >= 20 samples");
  if (variance <= 0.0) throw input_error("ks_statistic: variance must be positive");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double sd = std::sqrt(variance);
  double stat = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf(sorted[i] / sd);
    stat = std::max(stat, std::max(f - i / n, (i + 1) / n - f));
  }
  const double crit = 1.628 / std::sqrt(n);
  return KsResult{stat, crit, stat < crit};
}

std::vector<std::pair<double, double>> qq_points(const std::vector<double>& samples,
                                                 double variance) {
  if (samples.empty()) throw input_error("qq_points: empty input");
  if (variance <= 0.0) throw input_error("qq_points: variance must be positive");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(variance);
  const double n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> pts(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    pts[i] = {sd * normal_quantile((i + 0.5) / n), sorted[i]};
  return pts;
}

namespace {

// quantile re-sampling of sorted values at plotting positions (i-0.5)/m
std::vector<double> resample_sorted(const std::vector<double>& sorted, std::size_t m) {
  const std::size_t n = sorted.size();
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double pos = (i + 0.5) / m * n - 0.5;
    if (pos <= 0.0) {
      out[i] = sorted.front();
    } else if (pos >= n - 1) {
      out[i] = sorted.back();
    } else {
      const std::size_t k = static_cast<std::size_t>(pos);
      const double w = pos - k;
      out[i] = (1.0 - w) * sorted[k] + w * sorted[k + 1];
    }
  }
  return out;
}

}  // namespace

double wasserstein1_1d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw input_error("wasserstein1_1d: empty input");
  std::vector<double> sa = a, sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa.size() != sb.size()) {
    if (sa.size() > sb.size())
      sa = resample_sorted(sa, sb.size());
    else
      sb = resample_sorted(sb, sa.size());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) acc += std::abs(sa[i] - sb[i]);
  return acc / sa.size();
}

}  // namespace nsk
