#ifndef NSK_KERNEL_HOM_HPP
#define NSK_KERNEL_HOM_HPP

#include <Eigen/Dense>
#include <vector>

#include "nsk/kernel_inhom.hpp"
#include "nsk/path.hpp"

namespace nsk {

// Kernel values K(s_i, t_j) on a rectangular grid, together with the two
// diagonal surfaces the cross recursion reads.
struct KernelSurface {
  Partition s_grid;
  Partition t_grid;
  Eigen::MatrixXd values;   // (|s_grid|) x (|t_grid|)
  Eigen::VectorXd diag_xx;  // K^{x,x}(s_i, s_i)
  Eigen::VectorXd diag_yy;  // K^{y,y}(t_j, t_j)

  double corner() const { return values(values.rows() - 1, values.cols() - 1); }
};

// Diagonal s -> K^{x,x}(s, s) of the self-surface of x on D x D.
Eigen::VectorXd surface_diagonal(const PiecewiseLinearPath& x, const Partition& D,
                                 const KernelParams& params);

// Two-parameter difference equation: the x,x surface on D x D, the y,y
// surface on D2 x D2 (for their diagonals), then the cross surface on D x D2.
KernelSurface discrete_surface(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                               const Partition& D, const Partition& D2,
                               const KernelParams& params);

// Goursat scheme for the classical signature kernel: the same recursion at
// act = Id, sigma_a = sigma_A = 1, sigma_b = 0, unit boundary.
KernelSurface sig_kernel_surface(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                                 const Partition& D, const Partition& D2);

// Affine image of the signature-kernel surface of the sigma_A-scaled paths:
// (sigma_a^2 + sigma_b^2/sigma_A^2) k_sig - sigma_b^2/sigma_A^2.
// Identical (in exact arithmetic) to discrete_surface with act = Id.
KernelSurface hom_id_affine_surface(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                                    const Partition& D, const Partition& D2,
                                    const KernelParams& params);

// The above on a uniform grid of depth grid_M, read at the nearest grid
// point to (s, t).
double closed_form_hom_id(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                          double s, double t, const KernelParams& params, int grid_M);

struct SigSeriesResult {
  double value;
  double tail_bound;
  bool tail_warning;  // set when tail_bound > 1
};

// Truncated signature-kernel series: level-by-level inner products of the
// signatures of x|[0,s] and y|[0,t] up to the given level, via Chen's
// identity over linear segments. Dense tensor storage; requires dim <= 3 and
// level <= 15.
SigSeriesResult sig_series_oracle(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                                  double s, double t, int level);

// Symmetric Gram of K(x_i, x_j)(1,1) on uniform grids of depth grid_M;
// each path's diagonal is computed once and shared.
Eigen::MatrixXd gram_hom(const std::vector<PiecewiseLinearPath>& paths,
                         const KernelParams& params, int grid_M);

}  // namespace nsk

#endif
