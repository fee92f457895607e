#include <doctest.h>

#include <cmath>

#include "nsk/errors.hpp"
#include "nsk/kernel_hom.hpp"
#include "nsk/rng.hpp"

using nsk::Activation;
using nsk::KernelParams;
using nsk::Partition;
using nsk::PiecewiseLinearPath;

namespace {

PiecewiseLinearPath line(double slope) {
  Eigen::MatrixXd v(2, 1);
  v << 0.0, slope;
  return PiecewiseLinearPath({0.0, 1.0}, v);
}

PiecewiseLinearPath random_path(nsk::SplitStream& s, int d, int knots, double scale) {
  std::vector<double> times(knots);
  for (int i = 0; i < knots; ++i) times[i] = static_cast<double>(i) / (knots - 1);
  Eigen::MatrixXd vals(knots, d);
  vals.row(0).setZero();
  for (int i = 1; i < knots; ++i)
    for (int j = 0; j < d; ++j) vals(i, j) = vals(i - 1, j) + s.normal() * scale;
  return PiecewiseLinearPath(std::move(times), std::move(vals));
}

// E of the signature kernel of two unit lines at (1,1): sum 1/(n!)^2 = I_0(2).
constexpr double kBesselI0Of2 = 2.2795853023360673;

}  // namespace

TEST_CASE("signature kernel of unit lines approaches I_0(2)") {
  const auto x = line(1.0);
  double prev_err = 1e300;
  for (int M : {64, 128, 256, 512}) {
    const auto D = Partition::uniform(M);
    const auto surf = nsk::sig_kernel_surface(x, x, D, D);
    const double err = std::abs(surf.corner() - kBesselI0Of2);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 5e-3);
}

TEST_CASE("sig_series_oracle: unit line matches the Bessel value") {
  const auto x = line(1.0);
  const auto r = nsk::sig_series_oracle(x, x, 1.0, 1.0, 15);
  CHECK(r.value == doctest::Approx(kBesselI0Of2).epsilon(1e-12));
  CHECK(r.tail_bound < 1e-12);
  CHECK_FALSE(r.tail_warning);
}

TEST_CASE("sig_series_oracle: orthogonal lines give 1") {
  Eigen::MatrixXd vx(2, 2), vy(2, 2);
  vx << 0, 0, 1, 0;
  vy << 0, 0, 0, 1;
  const PiecewiseLinearPath x({0.0, 1.0}, vx);
  const PiecewiseLinearPath y({0.0, 1.0}, vy);
  const auto r = nsk::sig_series_oracle(x, y, 1.0, 1.0, 12);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sig_series_oracle: level-1 truncation is 1 + <x(s), y(t)>") {
  nsk::SplitStream s(101);
  const auto x = random_path(s, 2, 5, 0.3);
  const auto y = random_path(s, 2, 6, 0.3);
  const auto r = nsk::sig_series_oracle(x, y, 0.7, 0.9, 1);
  const double want = 1.0 + x.value_at(0.7).dot(y.value_at(0.9));
  CHECK(r.value == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("sig_series_oracle: restricted-path sub-rectangle consistency") {
  nsk::SplitStream s(7);
  const auto x = random_path(s, 2, 5, 0.25);
  const auto y = random_path(s, 2, 5, 0.25);
  const auto full = nsk::sig_series_oracle(x, y, 0.6, 0.8, 12);
  const auto D = Partition::uniform(400);
  const auto surf = nsk::sig_kernel_surface(x, y, D, D);
  // nearest grid node to (0.6, 0.8)
  const double grid_val = surf.values(240, 320);
  CHECK(grid_val == doctest::Approx(full.value).epsilon(1e-2));
}

TEST_CASE("sig_series_oracle: input caps") {
  const auto x = line(1.0);
  CHECK_THROWS_AS(nsk::sig_series_oracle(x, x, 1.0, 1.0, 16), nsk::input_error);
  nsk::SplitStream s(1);
  const auto big = random_path(s, 4, 4, 0.2);
  CHECK_THROWS_AS(nsk::sig_series_oracle(big, big, 1.0, 1.0, 5), nsk::input_error);
}

TEST_CASE("discrete surface against the signature kernel oracle") {
  nsk::SplitStream s(303);
  const auto x = random_path(s, 2, 6, 0.3);
  const auto y = random_path(s, 2, 7, 0.3);
  const auto oracle = nsk::sig_series_oracle(x, y, 1.0, 1.0, 14);
  REQUIRE_FALSE(oracle.tail_warning);
  double prev_err = 1e300;
  for (int M : {128, 256, 512}) {
    const auto D = Partition::uniform(M);
    const double got = nsk::sig_kernel_surface(x, y, D, D).corner();
    const double err = std::abs(got - oracle.value);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err < 1e-2 * std::abs(oracle.value));
}

TEST_CASE("id activation: discrete surface equals the affine sig-kernel image") {
  const KernelParams params{1.3, 0.8, 0.5, Activation::id()};
  nsk::SplitStream s(11);
  const auto x = random_path(s, 2, 5, 0.3);
  const auto y = random_path(s, 2, 8, 0.3);
  const auto D = Partition::uniform(80);
  const auto D2 = Partition::uniform(112);
  const auto direct = nsk::discrete_surface(x, y, D, D2, params);
  const auto affine = nsk::hom_id_affine_surface(x, y, D, D2, params);
  CHECK((direct.values - affine.values).cwiseAbs().maxCoeff() <
        1e-10 * direct.values.cwiseAbs().maxCoeff());
}

TEST_CASE("closed_form_hom_id pins the corner") {
  const KernelParams params{1.0, 1.0, 0.0, Activation::id()};
  const auto x = line(1.0);
  const double v = nsk::closed_form_hom_id(x, x, 1.0, 1.0, params, 512);
  CHECK(v == doctest::Approx(kBesselI0Of2).epsilon(5e-3));
}

TEST_CASE("rescaling symmetry: sigma_A folds into the paths") {
  // K(x, y; sigma_a, sigma_A, sigma_b) = K(sigma_A x, sigma_A y; sigma_a, 1,
  // sigma_b / sigma_A), for every activation.
  nsk::SplitStream s(17);
  const auto x = random_path(s, 2, 6, 0.3);
  const auto y = random_path(s, 2, 6, 0.3);
  const auto D = Partition::uniform(64);
  for (const auto& act : {Activation::id(), Activation::relu(), Activation::erf()}) {
    const KernelParams params{1.1, 1.4, 0.6, act};
    const KernelParams reduced{1.1, 1.0, 0.6 / 1.4, act};
    const auto base = nsk::discrete_surface(x, y, D, D, params);
    const auto scaled = nsk::discrete_surface(x.scaled(1.4), y.scaled(1.4), D, D, reduced);
    CHECK((base.values - scaled.values).cwiseAbs().maxCoeff() < 1e-12 *
          std::max(1.0, base.values.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("surface diagonal matches the self-surface diagonal") {
  const KernelParams params{1.0, 1.2, 0.3, Activation::relu()};
  nsk::SplitStream s(23);
  const auto x = random_path(s, 2, 6, 0.3);
  const auto D = Partition::uniform(48);
  const auto diag = nsk::surface_diagonal(x, D, params);
  const auto surf = nsk::discrete_surface(x, x, D, D, params);
  REQUIRE(diag.size() == 49);
  CHECK((diag - surf.diag_xx).cwiseAbs().maxCoeff() < 1e-12);
  // K(0,0) is the initial variance. (The diagonal is generally not monotone:
  // the layer weights are shared, so increments are correlated with the
  // state and the quadratic mean can dip.)
  CHECK(diag[0] == doctest::Approx(1.0));
}

TEST_CASE("cross surface is symmetric under swapping the arguments") {
  const KernelParams params{1.0, 1.0, 0.2, Activation::relu()};
  nsk::SplitStream s(29);
  const auto x = random_path(s, 2, 6, 0.3);
  const auto y = random_path(s, 2, 5, 0.3);
  const auto D = Partition::uniform(32);
  const auto D2 = Partition::uniform(48);
  const auto a = nsk::discrete_surface(x, y, D, D2, params);
  const auto b = nsk::discrete_surface(y, x, D2, D, params);
  CHECK((a.values - b.values.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gram_hom is symmetric PSD and matches pairwise surfaces") {
  const KernelParams params{1.0, 1.0, 0.1, Activation::relu()};
  nsk::SplitStream s(31);
  std::vector<PiecewiseLinearPath> paths;
  for (int i = 0; i < 4; ++i) paths.push_back(random_path(s, 2, 5, 0.3));
  const auto G = nsk::gram_hom(paths, params, 64);
  CHECK((G - G.transpose()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  CHECK(es.eigenvalues().minCoeff() > -1e-8 * G.norm());
  const auto D = Partition::uniform(64);
  const auto pair01 = nsk::discrete_surface(paths[0], paths[1], D, D, params);
  CHECK(G(0, 1) == doctest::Approx(pair01.corner()).epsilon(1e-12));
}

TEST_CASE("zero path gives the flat surface sigma_a^2") {
  Eigen::MatrixXd v(2, 1);
  v << 0.0, 0.0;
  const PiecewiseLinearPath z({0.0, 1.0}, v);
  const KernelParams params{1.4, 1.0, 0.6, Activation::relu()};
  const auto D = Partition::uniform(16);
  const auto surf = nsk::discrete_surface(z, z, D, D, params);
  CHECK((surf.values.array() - 1.4 * 1.4).abs().maxCoeff() < 1e-12);
}
