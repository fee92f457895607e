#include "nsk/resnet.hpp"

#include <cmath>
#include <mutex>
#include <string>
#include <thread>

#include "nsk/errors.hpp"

namespace nsk {

namespace {

// substream roles for weight sampling
enum Role : std::uint64_t { kInitVec = 1, kReadout = 2, kMatrix = 3, kBias = 4 };

void fill_normal(SplitStream stream, double stddev, Eigen::Ref<Eigen::VectorXd> out) {
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = stddev * stream.normal();
}

void fill_normal_matrix(SplitStream stream, double stddev, Eigen::MatrixXd& out) {
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) = stddev * stream.normal();
}

void apply_activation(const Activation& act, const Eigen::VectorXd& in, Eigen::VectorXd& out) {
  out.resize(in.size());
  for (Eigen::Index i = 0; i < in.size(); ++i) out[i] = act(in[i]);
}

void check_finite(const Eigen::VectorXd& state, int layer) {
  if (!state.allFinite())
    throw numerical_error("forward: non-finite state at layer " + std::to_string(layer));
}

Eigen::VectorXd run_recursion(const ResNetWeights& w, const SimConfig& config,
                              const PiecewiseLinearPath& x, const Partition& part,
                              Eigen::MatrixXd* trajectory) {
  if (x.dim() != w.dim) throw input_error("forward: path dimension does not match weights");
  const int N = config.width;
  const int M = part.depth();
  Eigen::VectorXd state = w.init_vec;
  if (trajectory) {
    trajectory->resize(M + 1, N);
    trajectory->row(0) = state.transpose();
  }
  Eigen::VectorXd phi;
  for (int i = 0; i < M; ++i) {
    const Eigen::VectorXd dx = x.increment(part.points[i], part.points[i + 1]);
    apply_activation(config.params.act, state, phi);
    for (int j = 0; j < w.dim; ++j) {
      const double step = dx[j];
      if (step == 0.0) continue;
      state.noalias() += step * (w.matrix(i, j) * phi);
      state += step * w.bias(i, j);
    }
    if ((i & 31) == 31) check_finite(state, i + 1);
    if (trajectory) trajectory->row(i + 1) = state.transpose();
  }
  check_finite(state, M);
  return state;
}

}  // namespace

void SimConfig::validate() const {
  if (width < 1) throw input_error("sim config: width must be >= 1");
  partition.validate();
  params.validate();
}

ResNetWeights init_weights(const SimConfig& config, int dim) {
  config.validate();
  if (dim < 1) throw input_error("init_weights: dim must be >= 1");
  const int N = config.width;
  const int M = config.partition.depth();
  const SplitStream root{config.seed};

  ResNetWeights w;
  w.mode = config.mode;
  w.dim = dim;
  w.init_vec.resize(N);
  fill_normal(root.child(kInitVec), config.params.sigma_a, w.init_vec);
  w.readout.resize(N);
  fill_normal(root.child(kReadout), 1.0 / std::sqrt(static_cast<double>(N)), w.readout);

  if (config.mode == WeightMode::Homogeneous) {
    const double mat_sd = config.params.sigma_A / std::sqrt(static_cast<double>(N));
    w.matrices.resize(dim);
    w.biases.resize(dim);
    for (int j = 0; j < dim; ++j) {
      w.matrices[j].resize(N, N);
      fill_normal_matrix(root.child(kMatrix).child(j), mat_sd, w.matrices[j]);
      w.biases[j].resize(N);
      fill_normal(root.child(kBias).child(j), config.params.sigma_b, w.biases[j]);
    }
  } else {
    w.matrices.resize(static_cast<std::size_t>(M) * dim);
    w.biases.resize(static_cast<std::size_t>(M) * dim);
    for (int i = 0; i < M; ++i) {
      const double dt = config.partition.points[i + 1] - config.partition.points[i];
      const double mat_sd = config.params.sigma_A / std::sqrt(static_cast<double>(N) * dt);
      const double bias_sd = config.params.sigma_b / std::sqrt(dt);
      for (int j = 0; j < dim; ++j) {
        auto& mat = w.matrices[static_cast<std::size_t>(i) * dim + j];
        mat.resize(N, N);
        fill_normal_matrix(root.child(kMatrix).child(j).child(i), mat_sd, mat);
        auto& bias = w.biases[static_cast<std::size_t>(i) * dim + j];
        bias.resize(N);
        fill_normal(root.child(kBias).child(j).child(i), bias_sd, bias);
      }
    }
  }
  return w;
}

ForwardResult forward(const ResNetWeights& weights, const SimConfig& config,
                      const PiecewiseLinearPath& x) {
  ForwardResult res;
  const Eigen::VectorXd final_state =
      run_recursion(weights, config, x, config.partition, &res.trajectory);
  res.readout_value = weights.readout.dot(final_state);
  return res;
}

Eigen::VectorXd forward_final(const ResNetWeights& weights, const SimConfig& config,
                              const PiecewiseLinearPath& x, const Partition& partition) {
  return run_recursion(weights, config, x, partition, nullptr);
}

Eigen::VectorXd cde_euler(const ResNetWeights& weights, const SimConfig& config,
                          const PiecewiseLinearPath& x, const Partition& fine) {
  if (weights.mode != WeightMode::Homogeneous)
    throw input_error("cde_euler: homogeneous weights required");
  fine.validate();
  return run_recursion(weights, config, x, fine, nullptr);
}

EnsembleResult mc_ensemble(const SimConfig& config, const std::vector<PiecewiseLinearPath>& paths,
                           int realizations, int threads) {
  config.validate();
  if (realizations < 1) throw input_error("mc_ensemble: realizations must be >= 1");
  if (paths.empty()) throw input_error("mc_ensemble: need at least one path");
  const int n = static_cast<int>(paths.size());
  const int dim = paths[0].dim();
  for (const auto& p : paths)
    if (p.dim() != dim) throw input_error("mc_ensemble: paths must share dimension");

  EnsembleResult out;
  out.readouts.resize(realizations, n);
  out.inner_products.assign(realizations, Eigen::MatrixXd(n, n));

  std::string failure;
  std::mutex failure_mutex;
  auto worker = [&](int begin, int end) {
    try {
      for (int r = begin; r < end; ++r) {
        SimConfig local = config;
        local.seed = SplitStream(config.seed).child(r).key();
        const ResNetWeights w = init_weights(local, dim);
        std::vector<Eigen::VectorXd> finals(n);
        for (int i = 0; i < n; ++i) {
          finals[i] = forward_final(w, local, paths[i], local.partition);
          out.readouts(r, i) = w.readout.dot(finals[i]);
        }
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            out.inner_products[r](i, j) = finals[i].dot(finals[j]) / config.width;
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (failure.empty())
        failure = "realizations [" + std::to_string(begin) + "," + std::to_string(end) +
                  "): " + e.what();
    }
  };

  const int workers = std::max(1, std::min(threads, realizations));
  if (workers == 1) {
    worker(0, realizations);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (realizations + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(realizations, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (!failure.empty()) throw numerical_error("mc_ensemble: " + failure);
  return out;
}

double sde_euler_inhom(const SimConfig& config, const PiecewiseLinearPath& x) {
  if (config.mode != WeightMode::Inhomogeneous)
    throw input_error("sde_euler_inhom: inhomogeneous mode required");
  const ResNetWeights w = init_weights(config, x.dim());
  return forward(w, config, x).readout_value;
}

}  // namespace nsk
