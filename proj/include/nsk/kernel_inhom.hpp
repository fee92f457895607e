#ifndef NSK_KERNEL_INHOM_HPP
#define NSK_KERNEL_INHOM_HPP

#include <Eigen/Dense>
#include <vector>

#include "nsk/path.hpp"
#include "nsk/vphi.hpp"

namespace nsk {

struct KernelParams {
  double sigma_a = 1.0;  // > 0
  double sigma_A = 1.0;  // > 0
  double sigma_b = 0.0;  // >= 0
  Activation act = Activation::id();

  void validate() const;
};

// Coupled state (kappa^{x,x}, kappa^{x,y}, kappa^{y,y}) at one time.
struct KernelTriple {
  double k_xx;
  double k_xy;
  double k_yy;

  Psd2 as_psd2() const { return Psd2{k_xx, k_xy, k_yy}; }
};

struct KernelTrajectory {
  std::vector<double> times;
  std::vector<KernelTriple> values;

  const KernelTriple& final() const { return values.back(); }
};

// Width-limit difference equation on the given partition, all three
// components evolved jointly from (sigma_a^2, sigma_a^2, sigma_a^2).
KernelTrajectory discrete_kernel(const PiecewiseLinearPath& x,
                                 const PiecewiseLinearPath& y,
                                 const Partition& part, const KernelParams& params);

enum class OdeMethod { Euler, RK4 };

OdeMethod parse_ode_method(const std::string& name);

// Integrates the coupled kernel ODE on a uniform grid refined by both
// paths' knots, so the driver <x', y'> is constant within every step.
KernelTrajectory solve_ode(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                           const KernelParams& params, int steps, OdeMethod method);

// (sigma_a^2 + sigma_b^2/sigma_A^2) exp(sigma_A^2 int_0^t <x',y'>) - sigma_b^2/sigma_A^2.
// Exact for any activation when act = Id; the integral is computed segment-wise.
double closed_form_id(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                      double t, const KernelParams& params);

// Diagonal ReLU closed form:
// (sigma_a^2 + 2 sigma_b^2/sigma_A^2) exp(sigma_A^2/2 int_0^t |x'|^2) - 2 sigma_b^2/sigma_A^2.
double closed_form_relu_diag(const PiecewiseLinearPath& x, double t,
                             const KernelParams& params);

// Symmetric Gram matrix of kappa(x_i, x_j)(1), each pair solved with RK4.
Eigen::MatrixXd gram(const std::vector<PiecewiseLinearPath>& paths,
                     const KernelParams& params, int steps);

}  // namespace nsk

#endif
