#ifndef NSK_RESNET_HPP
#define NSK_RESNET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "nsk/kernel_inhom.hpp"
#include "nsk/path.hpp"
#include "nsk/rng.hpp"

namespace nsk {

enum class WeightMode { Homogeneous, Inhomogeneous };

struct SimConfig {
  int width = 1;
  Partition partition;
  WeightMode mode = WeightMode::Homogeneous;
  KernelParams params;
  std::uint64_t seed = 0;

  void validate() const;
};

// Sampled Gaussian initialization. Homogeneous: one N x N matrix and one
// bias per channel, entries N(0, sigma_A^2/N) and N(0, sigma_b^2).
// Inhomogeneous: per channel and layer, entries N(0, sigma_A^2/(N dt_i))
// and N(0, sigma_b^2/dt_i). Immutable after init.
struct ResNetWeights {
  WeightMode mode;
  int dim;
  Eigen::VectorXd init_vec;                // a ~ N(0, sigma_a^2)
  Eigen::VectorXd readout;                 // psi ~ N(0, 1/N)
  std::vector<Eigen::MatrixXd> matrices;   // hom: [channel]; inhom: [layer * dim + channel]
  std::vector<Eigen::VectorXd> biases;     // same indexing

  const Eigen::MatrixXd& matrix(int layer, int channel) const {
    return matrices[mode == WeightMode::Homogeneous ? channel : layer * dim + channel];
  }
  const Eigen::VectorXd& bias(int layer, int channel) const {
    return biases[mode == WeightMode::Homogeneous ? channel : layer * dim + channel];
  }
};

// Deterministic in (config.seed, role, channel, layer); independent of any
// parallel schedule.
ResNetWeights init_weights(const SimConfig& config, int dim);

struct ForwardResult {
  Eigen::MatrixXd trajectory;  // (M+1) x N hidden states
  double readout_value;
};

// S_{i+1} = S_i + sum_j (A_{j,i} phi(S_i) + b_{j,i}) dx^j over the partition.
ForwardResult forward(const ResNetWeights& weights, const SimConfig& config,
                      const PiecewiseLinearPath& x);

// Final hidden state only, no trajectory storage.
Eigen::VectorXd forward_final(const ResNetWeights& weights, const SimConfig& config,
                              const PiecewiseLinearPath& x, const Partition& partition);

// Euler solve of the randomized-signature CDE driven by homogeneous weights
// on a fine partition. Throws input_error on inhomogeneous weights.
Eigen::VectorXd cde_euler(const ResNetWeights& weights, const SimConfig& config,
                          const PiecewiseLinearPath& x, const Partition& fine);

struct EnsembleResult {
  Eigen::MatrixXd readouts;                    // R x n
  std::vector<Eigen::MatrixXd> inner_products; // per realization, n x n of (1/N)<S(x_i), S(x_j)>
};

// R weight realizations over the given paths; realization r draws from the
// substream (config.seed, r). Thread count never changes the output.
EnsembleResult mc_ensemble(const SimConfig& config, const std::vector<PiecewiseLinearPath>& paths,
                           int realizations, int threads = 1);

// Euler-Maruyama realization of the inhomogeneous SDE limit: by construction
// this is exactly the inhomogeneous forward pass on the config partition.
double sde_euler_inhom(const SimConfig& config, const PiecewiseLinearPath& x);

}  // namespace nsk

#endif
