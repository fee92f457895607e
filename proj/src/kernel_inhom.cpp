#include "nsk/kernel_inhom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nsk/errors.hpp"

namespace nsk {

namespace {
constexpr double kPsdTol = 1e-8;

// Clamp small PSD violations of the cross term; larger ones are breakdowns.
void enforce_psd(KernelTriple& k, int step) {
  const double bound = std::sqrt(std::max(0.0, k.k_xx * k.k_yy));
  const double excess = std::abs(k.k_xy) - bound;
  if (excess <= 0.0) return;
  if (excess > kPsdTol * std::max(1.0, bound))
    throw numerical_error("kernel recursion: PSD violation at step " + std::to_string(step));
  k.k_xy = (k.k_xy < 0.0 ? -bound : bound);
}

struct TripleRates {
  double c_xx, c_xy, c_yy;  // <dx,dx>, <dx,dy>, <dy,dy> densities
};

KernelTriple rhs(const KernelTriple& k, const TripleRates& r, const KernelParams& p) {
  const double sA2 = p.sigma_A * p.sigma_A;
  const double sb2 = p.sigma_b * p.sigma_b;
  const double vxx = v_phi(p.act, Psd2{k.k_xx, k.k_xx, k.k_xx});
  const double vyy = v_phi(p.act, Psd2{k.k_yy, k.k_yy, k.k_yy});
  Psd2 cross{k.k_xx, k.k_xy, k.k_yy};
  const double bound = std::sqrt(std::max(0.0, cross.v11 * cross.v22));
  if (std::abs(cross.v12) > bound) cross.v12 = cross.v12 < 0.0 ? -bound : bound;
  const double vxy = v_phi(p.act, cross);
  return KernelTriple{(sA2 * vxx + sb2) * r.c_xx, (sA2 * vxy + sb2) * r.c_xy,
                      (sA2 * vyy + sb2) * r.c_yy};
}

}  // namespace

void KernelParams::validate() const {
  if (sigma_a <= 0.0 || sigma_A <= 0.0 || sigma_b < 0.0)
    throw input_error("kernel params: need sigma_a, sigma_A > 0 and sigma_b >= 0");
}

OdeMethod parse_ode_method(const std::string& name) {
  if (name == "euler") return OdeMethod::Euler;
  if (name == "rk4") return OdeMethod::RK4;
  throw input_error("unknown ODE method: " + name);
}

KernelTrajectory discrete_kernel(const PiecewiseLinearPath& x,
                                 const PiecewiseLinearPath& y,
                                 const Partition& part, const KernelParams& params) {
  params.validate();
  part.validate();
  if (x.dim() != y.dim()) throw input_error("discrete_kernel: dimension mismatch");
  const double sa2 = params.sigma_a * params.sigma_a;
  const double sA2 = params.sigma_A * params.sigma_A;
  const double sb2 = params.sigma_b * params.sigma_b;

  KernelTrajectory out;
  out.times = part.points;
  out.values.reserve(part.points.size());
  KernelTriple k{sa2, sa2, sa2};
  out.values.push_back(k);
  for (int i = 1; i <= part.depth(); ++i) {
    const double t0 = part.points[i - 1], t1 = part.points[i];
    const double dt = t1 - t0;
    const Eigen::VectorXd dx = x.increment(t0, t1);
    const Eigen::VectorXd dy = y.increment(t0, t1);
    const KernelTriple prev = k;
    const double vxx = v_phi(params.act, Psd2{prev.k_xx, prev.k_xx, prev.k_xx});
    const double vyy = v_phi(params.act, Psd2{prev.k_yy, prev.k_yy, prev.k_yy});
    const double vxy = v_phi(params.act, prev.as_psd2());
    k.k_xx += (sA2 * vxx + sb2) * dx.dot(dx) / dt;
    k.k_xy += (sA2 * vxy + sb2) * dx.dot(dy) / dt;
    k.k_yy += (sA2 * vyy + sb2) * dy.dot(dy) / dt;
    enforce_psd(k, i);
    out.values.push_back(k);
  }
  return out;
}

namespace {

// uniform grid of `steps` cells refined by both paths' knot sets
std::vector<double> refined_grid(const PiecewiseLinearPath& x,
                                 const PiecewiseLinearPath& y, int steps) {
  std::vector<double> grid;
  grid.reserve(steps + 1 + x.num_knots() + y.num_knots());
  for (int i = 0; i <= steps; ++i) grid.push_back(static_cast<double>(i) / steps);
  grid.insert(grid.end(), x.times().begin(), x.times().end());
  grid.insert(grid.end(), y.times().begin(), y.times().end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace

KernelTrajectory solve_ode(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                           const KernelParams& params, int steps, OdeMethod method) {
  params.validate();
  if (steps < 1) throw input_error("solve_ode: steps must be >= 1");
  if (x.dim() != y.dim()) throw input_error("solve_ode: dimension mismatch");
  const double sa2 = params.sigma_a * params.sigma_a;

  KernelTrajectory out;
  out.times = refined_grid(x, y, steps);
  out.values.reserve(out.times.size());
  KernelTriple k{sa2, sa2, sa2};
  out.values.push_back(k);
  for (std::size_t i = 1; i < out.times.size(); ++i) {
    const double t0 = out.times[i - 1], t1 = out.times[i];
    const double dt = t1 - t0;
    const double mid = 0.5 * (t0 + t1);
    // the driver is constant on each refined cell
    const Eigen::VectorXd xd = x.derivative_at(mid);
    const Eigen::VectorXd yd = y.derivative_at(mid);
    const TripleRates r{xd.dot(xd), xd.dot(yd), yd.dot(yd)};
    if (method == OdeMethod::Euler) {
      const KernelTriple f = rhs(k, r, params);
      k.k_xx += dt * f.k_xx;
      k.k_xy += dt * f.k_xy;
      k.k_yy += dt * f.k_yy;
    } else {
      const KernelTriple f1 = rhs(k, r, params);
      const KernelTriple s2{k.k_xx + 0.5 * dt * f1.k_xx, k.k_xy + 0.5 * dt * f1.k_xy,
                            k.k_yy + 0.5 * dt * f1.k_yy};
      const KernelTriple f2 = rhs(s2, r, params);
      const KernelTriple s3{k.k_xx + 0.5 * dt * f2.k_xx, k.k_xy + 0.5 * dt * f2.k_xy,
                            k.k_yy + 0.5 * dt * f2.k_yy};
      const KernelTriple f3 = rhs(s3, r, params);
      const KernelTriple s4{k.k_xx + dt * f3.k_xx, k.k_xy + dt * f3.k_xy,
                            k.k_yy + dt * f3.k_yy};
      const KernelTriple f4 = rhs(s4, r, params);
      k.k_xx += dt / 6.0 * (f1.k_xx + 2.0 * f2.k_xx + 2.0 * f3.k_xx + f4.k_xx);
      k.k_xy += dt / 6.0 * (f1.k_xy + 2.0 * f2.k_xy + 2.0 * f3.k_xy + f4.k_xy);
      k.k_yy += dt / 6.0 * (f1.k_yy + 2.0 * f2.k_yy + 2.0 * f3.k_yy + f4.k_yy);
    }
    enforce_psd(k, static_cast<int>(i));
    if (!std::isfinite(k.k_xx) || !std::isfinite(k.k_xy) || !std::isfinite(k.k_yy))
      throw numerical_error("solve_ode: non-finite kernel value at step " + std::to_string(i));
    out.values.push_back(k);
  }
  return out;
}

double closed_form_id(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                      double t, const KernelParams& params) {
  params.validate();
  const double sa2 = params.sigma_a * params.sigma_a;
  const double sA2 = params.sigma_A * params.sigma_A;
  const double ratio = params.sigma_b * params.sigma_b / sA2;
  return (sa2 + ratio) * std::exp(sA2 * integral_deriv_inner(x, y, t)) - ratio;
}

double closed_form_relu_diag(const PiecewiseLinearPath& x, double t,
                             const KernelParams& params) {
  params.validate();
  const double sa2 = params.sigma_a * params.sigma_a;
  const double sA2 = params.sigma_A * params.sigma_A;
  const double ratio = 2.0 * params.sigma_b * params.sigma_b / sA2;
  return (sa2 + ratio) * std::exp(0.5 * sA2 * integral_deriv_inner(x, x, t)) - ratio;
}

Eigen::MatrixXd gram(const std::vector<PiecewiseLinearPath>& paths,
                     const KernelParams& params, int steps) {
  if (paths.empty()) throw input_error("gram: need at least one path");
  const int n = static_cast<int>(paths.size());
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double v;
      try {
        v = solve_ode(paths[i], paths[j], params, steps, OdeMethod::RK4).final().k_xy;
      } catch (const numerical_error& e) {
        throw numerical_error("gram pair (" + std::to_string(i) + "," + std::to_string(j) +
                              "): " + e.what());
      }
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

}  // namespace nsk
