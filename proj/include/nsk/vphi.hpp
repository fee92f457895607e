#ifndef NSK_VPHI_HPP
#define NSK_VPHI_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace nsk {

// 2x2 PSD covariance block (v11 v12; v12 v22).
struct Psd2 {
  double v11 = 0.0;
  double v12 = 0.0;
  double v22 = 0.0;

  // Throws numerical_error if diagonals are negative or the off-diagonal
  // exceeds sqrt(v11*v22) by more than tol.
  void validate(double tol = 1e-10) const;

  // Membership in PSD2(R): diagonals in [1/R, R].
  bool in_ball(double R) const { return v11 >= 1.0 / R && v11 <= R && v22 >= 1.0 / R && v22 <= R; }
};

// Scalar activation: identity, ReLU, erf, or a tabulated user function
// (linear interpolation of samples, end segments extrapolated).
class Activation {
 public:
  enum class Kind { Id, ReLU, Erf, Tabulated };

  static Activation id() { return Activation(Kind::Id); }
  static Activation relu() { return Activation(Kind::ReLU); }
  static Activation erf() { return Activation(Kind::Erf); }
  // xs strictly increasing, ys the samples. Throws input_error on bad input.
  static Activation tabulated(std::vector<double> xs, std::vector<double> ys);

  Kind kind() const { return kind_; }
  double operator()(double x) const;

  // True when the function has no derivative kinks (Id, Erf).
  bool smooth() const { return kind_ == Kind::Id || kind_ == Kind::Erf; }

  // Kink abscissae of piecewise-linear activations, empty when smooth.
  std::vector<double> kinks() const;

  // Smallest M with |phi(x)| <= M(1+|x|) over the sample range (exact for
  // the named activations).
  double linear_bound() const;

  std::string name() const;

 private:
  explicit Activation(Kind k) : kind_(k) {}

  Kind kind_;
  std::vector<double> xs_, ys_;
};

Activation parse_activation(const std::string& name);

// off-diagonal correlation v12 / sqrt(v11*v22), clamped to [-1, 1];
// 0 when the matrix is diagonal-degenerate with v12 = 0.
double gamma_of(const Psd2& sigma);

// V_phi(Sigma) = E_{z ~ N(0, Sigma)}[phi(z1) phi(z2)].
// Closed forms for Id/ReLU/Erf; tabulated activations go through quadrature.
double v_phi(const Activation& act, const Psd2& sigma);

// Independent quadrature route for V_phi. Smooth activations use
// tensor-product Gauss-Hermite with `nodes` points per axis; piecewise-linear
// activations use the same node count per panel of a kink-split
// Gauss-Legendre rule (plain Gauss-Hermite stalls near 1e-4 on a kink).
double v_phi_quadrature(const Activation& act, const Psd2& sigma, int nodes);

struct QuadRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Probabilists' Gauss-Hermite: sum_i w_i f(x_i) approximates E[f(Z)],
// Z standard normal; weights sum to 1.
QuadRule gauss_hermite(int n);

// Gauss-Legendre on [-1, 1]; weights sum to 2.
QuadRule gauss_legendre(int n);

}  // namespace nsk

#endif
