#include "nsk/kernel_hom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nsk/errors.hpp"

namespace nsk {

namespace {

constexpr double kPsdTol = 1e-8;

// per-cell increments of a path over a partition, one row per cell
Eigen::MatrixXd cell_increments(const PiecewiseLinearPath& x, const Partition& D) {
  Eigen::MatrixXd dx(D.depth(), x.dim());
  for (int i = 0; i < D.depth(); ++i)
    dx.row(i) = x.increment(D.points[i], D.points[i + 1]).transpose();
  return dx;
}

double clamped_cross(double xx, double xy, double yy, int m, int n) {
  const double bound = std::sqrt(std::max(0.0, xx * yy));
  const double excess = std::abs(xy) - bound;
  if (excess <= 0.0) return xy;
  if (excess > kPsdTol * std::max(1.0, bound))
    throw numerical_error("surface recursion: PSD violation at (" + std::to_string(m) + "," +
                          std::to_string(n) + ")");
  return xy < 0.0 ? -bound : bound;
}

// Self-surface of x on D x D. The Sigma block reads the surface's own
// diagonal, so the sweep fills the lower triangle row by row and mirrors;
// every value the update needs is then already present.
Eigen::MatrixXd self_surface(const PiecewiseLinearPath& x, const Partition& D,
                             const KernelParams& params) {
  const int M = D.depth();
  const Eigen::MatrixXd dx = cell_increments(x, D);
  const Eigen::MatrixXd inner = dx * dx.transpose();
  const double sa2 = params.sigma_a * params.sigma_a;
  const double sA2 = params.sigma_A * params.sigma_A;
  const double sb2 = params.sigma_b * params.sigma_b;

  Eigen::MatrixXd K = Eigen::MatrixXd::Constant(M + 1, M + 1, sa2);
  for (int m = 1; m <= M; ++m)
    for (int n = 1; n <= m; ++n) {
      const double xy = clamped_cross(K(m - 1, m - 1), K(m - 1, n - 1), K(n - 1, n - 1), m, n);
      const double v = v_phi(params.act, Psd2{K(m - 1, m - 1), xy, K(n - 1, n - 1)});
      const double val = K(m - 1, n) + K(m, n - 1) - K(m - 1, n - 1) +
                         (sA2 * v + sb2) * inner(m - 1, n - 1);
      if (!std::isfinite(val))
        throw numerical_error("surface recursion: overflow at (" + std::to_string(m) + "," +
                              std::to_string(n) + ")");
      K(m, n) = val;
      K(n, m) = val;
    }
  return K;
}

Eigen::MatrixXd cross_surface(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                              const Partition& D, const Partition& D2,
                              const Eigen::VectorXd& diag_xx, const Eigen::VectorXd& diag_yy,
                              const KernelParams& params) {
  const int M = D.depth(), M2 = D2.depth();
  const Eigen::MatrixXd inner = cell_increments(x, D) * cell_increments(y, D2).transpose();
  const double sa2 = params.sigma_a * params.sigma_a;
  const double sA2 = params.sigma_A * params.sigma_A;
  const double sb2 = params.sigma_b * params.sigma_b;

  Eigen::MatrixXd K = Eigen::MatrixXd::Constant(M + 1, M2 + 1, sa2);
  for (int m = 1; m <= M; ++m)
    for (int n = 1; n <= M2; ++n) {
      const double xy = clamped_cross(diag_xx[m - 1], K(m - 1, n - 1), diag_yy[n - 1], m, n);
      const double v = v_phi(params.act, Psd2{diag_xx[m - 1], xy, diag_yy[n - 1]});
      const double val = K(m - 1, n) + K(m, n - 1) - K(m - 1, n - 1) +
                         (sA2 * v + sb2) * inner(m - 1, n - 1);
      if (!std::isfinite(val))
        throw numerical_error("surface recursion: overflow at (" + std::to_string(m) + "," +
                              std::to_string(n) + ")");
      K(m, n) = val;
    }
  return K;
}

// diagonal of the signature-kernel self-surface of x on D x D
Eigen::VectorXd sig_self_diag(const PiecewiseLinearPath& x, const Partition& D) {
  const int M = D.depth();
  const Eigen::MatrixXd dx = cell_increments(x, D);
  const Eigen::MatrixXd inner = dx * dx.transpose();
  Eigen::MatrixXd K = Eigen::MatrixXd::Ones(M + 1, M + 1);
  for (int m = 1; m <= M; ++m)
    for (int n = 1; n <= M; ++n)
      K(m, n) = K(m - 1, n) + K(m, n - 1) + K(m - 1, n - 1) * (inner(m - 1, n - 1) - 1.0);
  return K.diagonal();
}

}  // namespace

Eigen::VectorXd surface_diagonal(const PiecewiseLinearPath& x, const Partition& D,
                                 const KernelParams& params) {
  return self_surface(x, D, params).diagonal();
}

KernelSurface discrete_surface(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                               const Partition& D, const Partition& D2,
                               const KernelParams& params) {
  params.validate();
  D.validate();
  D2.validate();
  if (x.dim() != y.dim()) throw input_error("discrete_surface: dimension mismatch");
  KernelSurface s;
  s.s_grid = D;
  s.t_grid = D2;
  s.diag_xx = surface_diagonal(x, D, params);
  s.diag_yy = surface_diagonal(y, D2, params);
  s.values = cross_surface(x, y, D, D2, s.diag_xx, s.diag_yy, params);
  return s;
}

KernelSurface sig_kernel_surface(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                                 const Partition& D, const Partition& D2) {
  D.validate();
  D2.validate();
  if (x.dim() != y.dim()) throw input_error("sig_kernel_surface: dimension mismatch");
  const int M = D.depth(), M2 = D2.depth();
  const Eigen::MatrixXd inner = cell_increments(x, D) * cell_increments(y, D2).transpose();

  KernelSurface s;
  s.s_grid = D;
  s.t_grid = D2;
  s.values = Eigen::MatrixXd::Ones(M + 1, M2 + 1);
  for (int m = 1; m <= M; ++m)
    for (int n = 1; n <= M2; ++n) {
      const double val = s.values(m - 1, n) + s.values(m, n - 1) +
                         s.values(m - 1, n - 1) * (inner(m - 1, n - 1) - 1.0);
      if (!std::isfinite(val))
        throw numerical_error("sig kernel: overflow at (" + std::to_string(m) + "," +
                              std::to_string(n) + ")");
      s.values(m, n) = val;
    }
  // diagonals of the self-kernels, for completeness
  s.diag_xx = sig_self_diag(x, D);
  s.diag_yy = sig_self_diag(y, D2);
  return s;
}

KernelSurface hom_id_affine_surface(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                                    const Partition& D, const Partition& D2,
                                    const KernelParams& params) {
  params.validate();
  const double sa2 = params.sigma_a * params.sigma_a;
  const double ratio = params.sigma_b * params.sigma_b / (params.sigma_A * params.sigma_A);
  KernelSurface s = sig_kernel_surface(x.scaled(params.sigma_A), y.scaled(params.sigma_A), D, D2);
  s.values = (sa2 + ratio) * s.values.array() - ratio;
  s.diag_xx = (sa2 + ratio) * s.diag_xx.array() - ratio;
  s.diag_yy = (sa2 + ratio) * s.diag_yy.array() - ratio;
  return s;
}

double closed_form_hom_id(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                          double s, double t, const KernelParams& params, int grid_M) {
  if (grid_M < 2) throw input_error("closed_form_hom_id: grid_M must be >= 2");
  if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0)
    throw input_error("closed_form_hom_id: (s, t) out of the unit square");
  const Partition D = Partition::uniform(grid_M);
  const KernelSurface surf = hom_id_affine_surface(x, y, D, D, params);
  const int i = static_cast<int>(std::lround(s * grid_M));
  const int j = static_cast<int>(std::lround(t * grid_M));
  return surf.values(i, j);
}

namespace {

// signature levels 0..L of the path restricted to [0, cut], dense per level
std::vector<Eigen::VectorXd> truncated_signature(const PiecewiseLinearPath& x, double cut,
                                                 int level) {
  const int d = x.dim();
  std::vector<Eigen::VectorXd> sig(level + 1);
  sig[0] = Eigen::VectorXd::Ones(1);
  std::size_t size = 1;
  for (int n = 1; n <= level; ++n) {
    size *= d;
    sig[n] = Eigen::VectorXd::Zero(size);
  }
  if (cut <= 0.0) return sig;

  const auto& times = x.times();
  std::vector<Eigen::VectorXd> powers(level + 1);  // v^{tensor k} / k!
  std::vector<Eigen::VectorXd> next(level + 1);
  for (int seg = 0; seg + 1 < x.num_knots() && times[seg] < cut; ++seg) {
    const double lo = times[seg];
    const double hi = std::min(times[seg + 1], cut);
    const Eigen::VectorXd v = x.increment(lo, hi);
    // Chen concatenation with a linear segment: exp(v) level-wise
    powers[0] = Eigen::VectorXd::Ones(1);
    for (int k = 1; k <= level; ++k) {
      const auto& prev = powers[k - 1];
      Eigen::VectorXd& p = powers[k];
      p.resize(prev.size() * d);
      for (Eigen::Index i = 0; i < prev.size(); ++i) p.segment(i * d, d) = prev[i] / k * v;
    }
    for (int n = 0; n <= level; ++n) {
      Eigen::VectorXd& out = next[n];
      out = Eigen::VectorXd::Zero(sig[n].size());
      for (int k = 0; k <= n; ++k) {
        const auto& a = sig[n - k];
        const auto& b = powers[k];
        for (Eigen::Index i = 0; i < a.size(); ++i)
          out.segment(i * b.size(), b.size()) += a[i] * b;
      }
    }
    sig.swap(next);
  }
  return sig;
}

double one_var_restricted(const PiecewiseLinearPath& x, double cut) {
  double acc = 0.0;
  const auto& times = x.times();
  for (int seg = 0; seg + 1 < x.num_knots() && times[seg] < cut; ++seg)
    acc += x.increment(times[seg], std::min(times[seg + 1], cut)).norm();
  return acc;
}

}  // namespace

SigSeriesResult sig_series_oracle(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                                  double s, double t, int level) {
  if (level < 1) throw input_error("sig_series_oracle: level must be >= 1");
  if (x.dim() != y.dim()) throw input_error("sig_series_oracle: dimension mismatch");
  if (x.dim() > 3 || level > 15)
    throw input_error("sig_series_oracle: capacity is dim <= 3 and level <= 15");
  if (s < 0.0 || s > 1.0 || t < 0.0 || t > 1.0)
    throw input_error("sig_series_oracle: (s, t) out of the unit square");

  const auto sx = truncated_signature(x, s, level);
  const auto sy = truncated_signature(y, t, level);
  double value = 0.0;
  for (int n = 0; n <= level; ++n) value += sx[n].dot(sy[n]);

  // factorial-decay tail: sum_{n > L} (|x|_1 |y|_1)^n / (n!)^2
  const double b = one_var_restricted(x, s) * one_var_restricted(y, t);
  double tail = 0.0;
  double term = 1.0;
  for (int n = 1; n <= level; ++n) term *= b / (static_cast<double>(n) * n);
  for (int n = level + 1; n <= level + 400; ++n) {
    term *= b / (static_cast<double>(n) * n);
    tail += term;
    if (term < 1e-300 * std::max(1.0, tail)) break;
  }
  return SigSeriesResult{value, tail, tail > 1.0};
}

Eigen::MatrixXd gram_hom(const std::vector<PiecewiseLinearPath>& paths,
                         const KernelParams& params, int grid_M) {
  if (paths.empty()) throw input_error("gram_hom: need at least one path");
  params.validate();
  const Partition D = Partition::uniform(grid_M);
  const int n = static_cast<int>(paths.size());
  std::vector<Eigen::VectorXd> diags(n);
  for (int i = 0; i < n; ++i) diags[i] = surface_diagonal(paths[i], D, params);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v;
      try {
        const Eigen::MatrixXd K = cross_surface(paths[i], paths[j], D, D, diags[i], diags[j], params);
        v = K(grid_M, grid_M);
      } catch (const numerical_error& e) {
        throw numerical_error("gram_hom pair (" + std::to_string(i) + "," + std::to_string(j) +
                              "): " + e.what());
      }
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

}  // namespace nsk
