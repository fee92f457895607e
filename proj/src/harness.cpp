#include "nsk/harness.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <thread>

#include "nsk/errors.hpp"
#include "nsk/kernel_hom.hpp"
#include "nsk/resnet.hpp"
#include "nsk/rng.hpp"

namespace nsk {

WidthSweepResult width_convergence(std::uint64_t seed, const std::vector<int>& widths,
                                   int depth, int realizations, int threads) {
  if (widths.empty()) throw input_error("width_convergence: need at least one width");
  const SplitStream root{seed};
  const PiecewiseLinearPath x = synth_path(SynthKind::GpRbf, 1, 50, root.child(101).key());
  const PiecewiseLinearPath y = synth_path(SynthKind::GpRbf, 1, 50, root.child(102).key());

  KernelParams params;  // id, (1, 1, 0)
  const Partition part = Partition::uniform(depth);
  // the width limit at this fixed partition is the discrete kernel itself
  const double target = discrete_surface(x, y, part, part, params).corner();

  WidthSweepResult res;
  res.widths = widths;
  res.kernel_target = target;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    SimConfig config;
    config.width = widths[k];
    config.partition = part;
    config.mode = WeightMode::Homogeneous;
    config.params = params;
    config.seed = root.child(200 + k).key();
    const EnsembleResult ens = mc_ensemble(config, {x, y}, realizations, threads);
    std::vector<double> ips(realizations), sq(realizations);
    for (int r = 0; r < realizations; ++r) {
      ips[r] = ens.inner_products[r](0, 1);
      const double d = ips[r] - target;
      sq[r] = d * d;
    }
    const double mse = mse_vs_target(ips, target);
    double var_sq = 0.0;
    for (double v : sq) var_sq += (v - mse) * (v - mse);
    var_sq /= realizations > 1 ? realizations - 1 : 1;
    res.mse.push_back(mse);
    res.std_error.push_back(std::sqrt(var_sq / realizations));
  }
  std::vector<double> ns(widths.begin(), widths.end());
  res.fit = loglog_slope(ns, res.mse);
  return res;
}

GaussianityResult gaussianity_sweep(std::uint64_t seed, const std::vector<int>& widths,
                                    int net_depth, int kernel_depth, int realizations,
                                    const KernelParams& params, int threads) {
  if (widths.empty()) throw input_error("gaussianity_sweep: need at least one width");
  const PiecewiseLinearPath x = synth_path(SynthKind::Paper2d, 2, 100);
  const Eigen::VectorXd diag = surface_diagonal(x, Partition::uniform(kernel_depth), params);
  const double variance = diag[diag.size() - 1];

  GaussianityResult res;
  res.widths = widths;
  res.variance = variance;
  res.critical_01 = 1.628 / std::sqrt(static_cast<double>(realizations));
  const SplitStream root{seed};
  for (std::size_t k = 0; k < widths.size(); ++k) {
    SimConfig config;
    config.width = widths[k];
    config.partition = Partition::uniform(net_depth);
    config.mode = WeightMode::Homogeneous;
    config.params = params;
    config.seed = root.child(300 + k).key();
    const EnsembleResult ens = mc_ensemble(config, {x}, realizations, threads);
    std::vector<double> samples(realizations);
    for (int r = 0; r < realizations; ++r) samples[r] = ens.readouts(r, 0);
    const KsResult ks = ks_statistic(samples, variance);
    res.ks_stat.push_back(ks.stat);
    res.ks_pass.push_back(ks.pass);
    res.readouts.push_back(std::move(samples));
  }
  return res;
}

DepthSweepResult depth_convergence(std::uint64_t seed, const std::vector<int>& depths,
                                   int reference_depth, int width, int realizations,
                                   int threads) {
  if (depths.empty()) throw input_error("depth_convergence: need at least one depth");
  for (int m : depths)
    if (m >= reference_depth)
      throw input_error("depth_convergence: depths must be below the reference depth");
  const SplitStream root{seed};

  // The commutativity bound is pathwise: it controls the gap between the
  // same network read on a coarse partition and on a fine one. We therefore
  // estimate W1 through the natural coupling (identical weights and driving
  // path within a realization); sorting the two samples independently would
  // bottom out at the R-sample resolution floor long before the gap does.
  //
  // Each realization draws its own rough driver, a unit random walk with
  // sqrt(dt) increments interpolated on 4096 knots. A smooth path makes the
  // coarse/fine gap O(mesh) (the Euler scheme order) rather than the
  // sqrt(mesh) the bound describes, and a single shared path leaves the gap
  // hostage to one realized quadratic-variation sequence; averaging fresh
  // paths over realizations gives the clean sqrt(mesh) rate. The knot count
  // must match the reference depth: refining below the knot scale divides
  // the realized quadratic variation of a piecewise-linear path, which
  // would open a constant gap between the reference and every sweep depth.
  const int n_knots = reference_depth;
  const std::uint64_t path_seed = root.child(103).key();
  auto draw_path = [&](int r) {
    SplitStream s = SplitStream(path_seed).child(r);
    std::vector<double> times(n_knots + 1);
    Eigen::MatrixXd vals(n_knots + 1, 1);
    vals(0, 0) = 0.0;
    const double step = std::sqrt(1.0 / n_knots);
    for (int i = 0; i <= n_knots; ++i) {
      times[i] = static_cast<double>(i) / n_knots;
      if (i > 0) vals(i, 0) = vals(i - 1, 0) + step * s.normal();
    }
    return PiecewiseLinearPath(std::move(times), std::move(vals));
  };

  SimConfig config;
  config.width = width;
  config.partition = Partition::uniform(reference_depth);
  config.mode = WeightMode::Homogeneous;
  config.params = KernelParams{};  // id, (1, 1, 0)
  config.seed = root.child(400).key();

  const int nd = static_cast<int>(depths.size());
  // rows: realizations; columns: |readout at depth k - readout at reference|
  Eigen::MatrixXd gaps(realizations, nd);

  std::string failure;
  std::mutex failure_mutex;
  auto worker = [&](int begin, int end) {
    try {
      for (int r = begin; r < end; ++r) {
        SimConfig local = config;
        local.seed = SplitStream(config.seed).child(r).key();
        const PiecewiseLinearPath x = draw_path(r);
        const ResNetWeights w = init_weights(local, x.dim());
        const Eigen::VectorXd s_ref =
            forward_final(w, local, x, Partition::uniform(reference_depth));
        const double ref = w.readout.dot(s_ref);
        for (int k = 0; k < nd; ++k) {
          const Eigen::VectorXd s = forward_final(w, local, x, Partition::uniform(depths[k]));
          gaps(r, k) = std::abs(w.readout.dot(s) - ref);
        }
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (failure.empty()) failure = e.what();
    }
  };
  const int workers = std::max(1, std::min(threads, realizations));
  if (workers == 1) {
    worker(0, realizations);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (realizations + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const int begin = t * chunk;
      const int end = std::min(realizations, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (!failure.empty()) throw numerical_error("depth_convergence: " + failure);

  DepthSweepResult res;
  res.depths = depths;
  res.reference_depth = reference_depth;
  for (int k = 0; k < nd; ++k) res.w1.push_back(gaps.col(k).mean());
  std::vector<double> ms(depths.begin(), depths.end());
  res.fit = loglog_slope(ms, res.w1);
  return res;
}

}  // namespace nsk
