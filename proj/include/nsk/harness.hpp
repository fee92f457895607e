#ifndef NSK_HARNESS_HPP
#define NSK_HARNESS_HPP

#include <cstdint>
#include <vector>

#include "nsk/kernel_inhom.hpp"
#include "nsk/path.hpp"
#include "nsk/stats.hpp"

namespace nsk {

// Width-convergence experiment: homogeneous id network on a GP-RBF path
// pair; MSE of (1/N)<S_1(x), S_1(y)> against the same-partition discrete
// kernel, swept over widths.
struct WidthSweepResult {
  std::vector<int> widths;
  std::vector<double> mse;
  std::vector<double> std_error;  // of the MSE estimate
  double kernel_target;
  SlopeFit fit;
};

WidthSweepResult width_convergence(std::uint64_t seed, const std::vector<int>& widths,
                                   int depth, int realizations, int threads = 1);

// Gaussianity experiment: ReLU homogeneous network on the 2-d benchmark
// path; KS statistics of the readouts against N(0, K(x,x)(1,1)), variance
// from the two-parameter solver at kernel_depth.
struct GaussianityResult {
  std::vector<int> widths;
  std::vector<double> ks_stat;
  std::vector<bool> ks_pass;
  double variance;
  double critical_01;
  std::vector<std::vector<double>> readouts;  // per width, for QQ output
};

GaussianityResult gaussianity_sweep(std::uint64_t seed, const std::vector<int>& widths,
                                    int net_depth, int kernel_depth, int realizations,
                                    const KernelParams& params, int threads = 1);

// Depth-commutativity experiment: homogeneous id network, W1 distance
// between readout samples at each depth and at the reference depth. The
// distance is evaluated under the natural coupling (weights and driving
// path shared per realization across depths), i.e. as the mean absolute
// readout gap, which is the quantity the pathwise bound controls.
struct DepthSweepResult {
  std::vector<int> depths;
  std::vector<double> w1;
  double reference_depth;
  SlopeFit fit;
};

DepthSweepResult depth_convergence(std::uint64_t seed, const std::vector<int>& depths,
                                   int reference_depth, int width, int realizations,
                                   int threads = 1);

}  // namespace nsk

#endif
