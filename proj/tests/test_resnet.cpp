#include <doctest.h>

#include <cmath>

#include "nsk/errors.hpp"
#include "nsk/kernel_hom.hpp"
#include "nsk/resnet.hpp"

using nsk::Activation;
using nsk::KernelParams;
using nsk::Partition;
using nsk::PiecewiseLinearPath;
using nsk::SimConfig;
using nsk::WeightMode;

namespace {

PiecewiseLinearPath line(double slope) {
  Eigen::MatrixXd v(2, 1);
  v << 0.0, slope;
  return PiecewiseLinearPath({0.0, 1.0}, v);
}

SimConfig make_config(int width, int depth, WeightMode mode, std::uint64_t seed) {
  SimConfig c;
  c.width = width;
  c.partition = Partition::uniform(depth);
  c.mode = mode;
  c.params = KernelParams{1.0, 1.0, 0.3, Activation::relu()};
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  auto c = make_config(0, 10, WeightMode::Homogeneous, 1);
  CHECK_THROWS_AS(c.validate(), nsk::input_error);
  c = make_config(8, 10, WeightMode::Homogeneous, 1);
  CHECK_NOTHROW(c.validate());
  c.partition.points.clear();
  CHECK_THROWS_AS(c.validate(), nsk::input_error);
}

TEST_CASE("weight shapes and indexing") {
  const auto c = make_config(16, 5, WeightMode::Inhomogeneous, 7);
  const auto w = nsk::init_weights(c, 2);
  CHECK(w.matrices.size() == 5 * 2);
  CHECK(w.biases.size() == 5 * 2);
  CHECK(w.matrix(3, 1).rows() == 16);
  CHECK(w.init_vec.size() == 16);
  CHECK(w.readout.size() == 16);

  const auto ch = make_config(16, 5, WeightMode::Homogeneous, 7);
  const auto wh = nsk::init_weights(ch, 2);
  CHECK(wh.matrices.size() == 2);
  CHECK(&wh.matrix(0, 1) == &wh.matrix(4, 1));
}

TEST_CASE("weight initialization is deterministic in the seed") {
  const auto c = make_config(32, 8, WeightMode::Homogeneous, 99);
  const auto a = nsk::init_weights(c, 2);
  const auto b = nsk::init_weights(c, 2);
  CHECK((a.matrices[0] - b.matrices[0]).norm() == 0.0);
  CHECK((a.init_vec - b.init_vec).norm() == 0.0);
  auto c2 = c;
  c2.seed = 100;
  const auto d = nsk::init_weights(c2, 2);
  CHECK((a.matrices[0] - d.matrices[0]).norm() > 0.0);
}

TEST_CASE("weight variances match the parameterization") {
  // Large single draws: sample variance of N*N entries should sit near the
  // target with ~5 sigma slack.
  auto c = make_config(400, 4, WeightMode::Homogeneous, 42);
  c.params = KernelParams{1.5, 1.2, 0.7, Activation::relu()};
  const auto w = nsk::init_weights(c, 1);
  const double n = 400.0 * 400.0;
  const double var_A = w.matrices[0].array().square().sum() / n;
  const double target_A = 1.2 * 1.2 / 400.0;
  CHECK(std::abs(var_A - target_A) < 5.0 * target_A * std::sqrt(2.0 / n));
  const double var_a = w.init_vec.array().square().sum() / 400.0;
  CHECK(std::abs(var_a - 1.5 * 1.5) < 5.0 * 1.5 * 1.5 * std::sqrt(2.0 / 400.0));
  const double var_b = w.biases[0].array().square().sum() / 400.0;
  CHECK(std::abs(var_b - 0.7 * 0.7) < 5.0 * 0.7 * 0.7 * std::sqrt(2.0 / 400.0));
  const double var_r = w.readout.array().square().sum() / 400.0;
  CHECK(std::abs(var_r - 1.0 / 400.0) < 5.0 * (1.0 / 400.0) * std::sqrt(2.0 / 400.0));

  // Inhomogeneous: layer matrices scale like 1/dt = depth.
  auto ci = make_config(200, 4, WeightMode::Inhomogeneous, 43);
  ci.params = c.params;
  const auto wi = nsk::init_weights(ci, 1);
  const double var_Ai = wi.matrices[0].array().square().sum() / (200.0 * 200.0);
  const double target_Ai = 1.2 * 1.2 / 200.0 * 4.0;
  CHECK(std::abs(var_Ai - target_Ai) < 5.0 * target_Ai * std::sqrt(2.0 / (200.0 * 200.0)));
}

TEST_CASE("forward: zero path leaves the state at the initial vector") {
  Eigen::MatrixXd v(2, 1);
  v << 0.0, 0.0;
  const PiecewiseLinearPath z({0.0, 1.0}, v);
  const auto c = make_config(8, 6, WeightMode::Homogeneous, 5);
  const auto w = nsk::init_weights(c, 1);
  const auto r = nsk::forward(w, c, z);
  CHECK((r.trajectory.row(6).transpose() - w.init_vec).norm() == 0.0);
  CHECK(r.readout_value == doctest::Approx(w.readout.dot(w.init_vec)));
}

TEST_CASE("forward: one step by hand") {
  const auto c = make_config(4, 1, WeightMode::Homogeneous, 77);
  const auto w = nsk::init_weights(c, 1);
  const auto x = line(0.5);
  const auto r = nsk::forward(w, c, x);
  Eigen::VectorXd phi = w.init_vec.cwiseMax(0.0);
  const Eigen::VectorXd want = w.init_vec + (w.matrices[0] * phi + w.biases[0]) * 0.5;
  CHECK((r.trajectory.row(1).transpose() - want).norm() < 1e-14);
}

TEST_CASE("forward_final agrees with the trajectory tail") {
  const auto c = make_config(16, 20, WeightMode::Inhomogeneous, 3);
  const auto w = nsk::init_weights(c, 2);
  const auto x = nsk::synth_path(nsk::SynthKind::Paper2d, 2, 50);
  const auto full = nsk::forward(w, c, x);
  const auto fin = nsk::forward_final(w, c, x, c.partition);
  CHECK((full.trajectory.row(20).transpose() - fin).norm() == 0.0);
}

TEST_CASE("readout is linear in the hidden state") {
  const auto c = make_config(8, 10, WeightMode::Homogeneous, 12);
  const auto w = nsk::init_weights(c, 1);
  const auto x = line(1.0);
  const auto r = nsk::forward(w, c, x);
  CHECK(r.readout_value ==
        doctest::Approx(w.readout.dot(r.trajectory.row(10).transpose())).epsilon(1e-12));
}

TEST_CASE("homogeneous forward equals the CDE Euler solve on the same grid") {
  const auto c = make_config(12, 32, WeightMode::Homogeneous, 9);
  const auto w = nsk::init_weights(c, 2);
  const auto x = nsk::synth_path(nsk::SynthKind::Paper2d, 2, 33);
  const auto fwd = nsk::forward_final(w, c, x, c.partition);
  const auto cde = nsk::cde_euler(w, c, x, c.partition);
  CHECK((fwd - cde).norm() < 1e-12 * std::max(1.0, fwd.norm()));
  const auto ci = make_config(12, 32, WeightMode::Inhomogeneous, 9);
  const auto wi = nsk::init_weights(ci, 2);
  CHECK_THROWS_AS(nsk::cde_euler(wi, ci, x, ci.partition), nsk::input_error);
}

TEST_CASE("sde_euler_inhom matches the inhomogeneous forward readout") {
  const auto c = make_config(10, 16, WeightMode::Inhomogeneous, 21);
  const auto x = nsk::synth_path(nsk::SynthKind::Paper2d, 2, 40);
  const auto w = nsk::init_weights(c, 2);
  const auto fwd = nsk::forward(w, c, x);
  CHECK(nsk::sde_euler_inhom(c, x) == doctest::Approx(fwd.readout_value).epsilon(1e-14));
}

TEST_CASE("mc_ensemble: thread count does not change results") {
  const auto c = make_config(8, 16, WeightMode::Homogeneous, 1234);
  std::vector<PiecewiseLinearPath> paths{line(1.0), line(0.5)};
  const auto a = nsk::mc_ensemble(c, paths, 12, 1);
  const auto b = nsk::mc_ensemble(c, paths, 12, 4);
  CHECK((a.readouts - b.readouts).norm() == 0.0);
  REQUIRE(a.inner_products.size() == 12);
  for (int r = 0; r < 12; ++r)
    CHECK((a.inner_products[r] - b.inner_products[r]).norm() == 0.0);
}

TEST_CASE("mc_ensemble: inner products are symmetric and PSD-diagonal") {
  const auto c = make_config(16, 16, WeightMode::Homogeneous, 8);
  std::vector<PiecewiseLinearPath> paths{line(1.0), line(-0.7)};
  const auto e = nsk::mc_ensemble(c, paths, 5, 2);
  for (const auto& ip : e.inner_products) {
    CHECK((ip - ip.transpose()).norm() == 0.0);
    CHECK(ip(0, 0) >= 0.0);
    CHECK(ip(1, 1) >= 0.0);
  }
}

TEST_CASE("ensemble mean inner product approaches the limiting kernel") {
  // Width 600, one path: (1/N)|S(1)|^2 should be close to the discrete
  // kernel diagonal on the same partition.
  auto c = make_config(600, 32, WeightMode::Homogeneous, 2718);
  c.params = KernelParams{1.0, 1.0, 0.3, Activation::relu()};
  const auto x = line(1.0);
  const auto e = nsk::mc_ensemble(c, {x}, 40, 4);
  double mean_ip = 0.0;
  for (const auto& ip : e.inner_products) mean_ip += ip(0, 0);
  mean_ip /= 40.0;
  const auto D = c.partition;
  const double target = nsk::surface_diagonal(x, D, c.params)[32];
  CHECK(mean_ip == doctest::Approx(target).epsilon(0.1));
}

TEST_CASE("divergence raises numerical_error") {
  // Enormous weights on a long path overflow quickly; the finiteness check
  // must report it rather than emit NaNs. (Identity activation: a dead ReLU
  // region could otherwise stall the blow-up.)
  auto c = make_config(8, 5000, WeightMode::Homogeneous, 6);
  c.params = KernelParams{1.0, 1000.0, 1.0, Activation::id()};
  const auto w = nsk::init_weights(c, 1);
  const auto x = line(5.0);
  CHECK_THROWS_AS(nsk::forward(w, c, x), nsk::numerical_error);
}
