#include "nsk/vphi.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "nsk/errors.hpp"

namespace nsk {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2Pi = 2.50662827463100050242;
// Truncation radius for the composite Gauss-Legendre rule; the neglected
// Gaussian tail mass (with the linearly bounded integrand) stays below 1e-13.
constexpr double kTailCut = 8.5;

// A width-3 Gaussian-weighted panel is resolved to machine precision by ~40
// Gauss-Legendre points; extra nodes beyond this only add cost.
constexpr int kPanelNodeCap = 48;

double clamp_unit(double x) { return std::min(1.0, std::max(-1.0, x)); }
}  // namespace

void Psd2::validate(double tol) const {
  if (v11 < -tol || v22 < -tol)
    throw numerical_error("Psd2: negative diagonal entry");
  if (v12 * v12 > v11 * v22 + tol)
    throw numerical_error("Psd2: off-diagonal violates positive semidefiniteness");
}

Activation Activation::tabulated(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() < 2 || xs.size() != ys.size())
    throw input_error("tabulated activation: need >= 2 matching samples");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] <= xs[i - 1]) throw input_error("tabulated activation: abscissae must increase");
  Activation a(Kind::Tabulated);
  a.xs_ = std::move(xs);
  a.ys_ = std::move(ys);
  if (!std::isfinite(a.linear_bound()))
    throw input_error("tabulated activation: fails the linear-bound check");
  return a;
}

double Activation::operator()(double x) const {
  switch (kind_) {
    case Kind::Id:
      return x;
    case Kind::ReLU:
      return x > 0.0 ? x : 0.0;
    case Kind::Erf:
      return std::erf(x);
    case Kind::Tabulated: {
      // linear interpolation; end segments extrapolate
      auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      std::size_t k = it == xs_.begin() ? 0 : static_cast<std::size_t>(it - xs_.begin()) - 1;
      if (k + 1 >= xs_.size()) k = xs_.size() - 2;
      const double w = (x - xs_[k]) / (xs_[k + 1] - xs_[k]);
      return ys_[k] + w * (ys_[k + 1] - ys_[k]);
    }
  }
  return 0.0;
}

std::vector<double> Activation::kinks() const {
  switch (kind_) {
    case Kind::ReLU:
      return {0.0};
    case Kind::Tabulated:
      return std::vector<double>(xs_.begin() + 1, xs_.end() - 1);
    default:
      return {};
  }
}

double Activation::linear_bound() const {
  switch (kind_) {
    case Kind::Id:
    case Kind::ReLU:
    case Kind::Erf:
      return 1.0;
    case Kind::Tabulated: {
      // |phi|/(1+|x|) is a ratio of linear functions on each segment half,
      // so its maximum sits at a knot or at x = 0.
      double m = 0.0;
      for (std::size_t i = 0; i < xs_.size(); ++i)
        m = std::max(m, std::abs(ys_[i]) / (1.0 + std::abs(xs_[i])));
      if (xs_.front() < 0.0 && xs_.back() > 0.0) m = std::max(m, std::abs((*this)(0.0)));
      return m;
    }
  }
  return 0.0;
}

std::string Activation::name() const {
  switch (kind_) {
    case Kind::Id:
      return "id";
    case Kind::ReLU:
      return "relu";
    case Kind::Erf:
      return "erf";
    case Kind::Tabulated:
      return "tabulated";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "id") return Activation::id();
  if (name == "relu") return Activation::relu();
  if (name == "erf") return Activation::erf();
  throw input_error("unknown activation: " + name);
}

double gamma_of(const Psd2& sigma) {
  sigma.validate();
  const double prod = sigma.v11 * sigma.v22;
  if (prod <= 0.0) {
    if (sigma.v12 != 0.0) throw numerical_error("gamma: degenerate diagonal with nonzero v12");
    return 0.0;
  }
  return clamp_unit(sigma.v12 / std::sqrt(prod));
}

namespace {

// Golub-Welsch on a symmetric tridiagonal Jacobi matrix.
QuadRule golub_welsch(const Eigen::VectorXd& offdiag, double total_mass) {
  const int n = static_cast<int>(offdiag.size()) + 1;
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n - 1; ++k) {
    jacobi(k, k + 1) = offdiag[k];
    jacobi(k + 1, k) = offdiag[k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  QuadRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n);
  for (int k = 0; k < n; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    rule.weights[k] = total_mass * v0 * v0;
  }
  return rule;
}

const QuadRule& cached_rule(int n, bool hermite) {
  static std::map<std::pair<int, bool>, QuadRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(n, hermite);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Eigen::VectorXd off(n - 1);
  if (hermite) {
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
  } else {
    for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  }
  return cache.emplace(key, golub_welsch(off, hermite ? 1.0 : 2.0)).first->second;
}

// integral over [a, b] of f(z) exp(-z^2/2)/sqrt(2 pi) dz by composite
// Gauss-Legendre; subpanels no wider than 3 keep the rule accurate at
// moderate node counts
template <typename F>
double gauss_cell(const QuadRule& gl, double a, double b, F&& f) {
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 3.0)));
  double acc = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double pa = a + (b - a) * p / panels;
    const double pb = a + (b - a) * (p + 1) / panels;
    const double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
    double cell = 0.0;
    for (int i = 0; i < gl.nodes.size(); ++i) {
      const double z = mid + half * gl.nodes[i];
      cell += gl.weights[i] * f(z) * std::exp(-0.5 * z * z);
    }
    acc += cell * half;
  }
  return acc / kSqrt2Pi;
}

// E[f(Z)] over [-kTailCut, kTailCut] split at the given breakpoints.
template <typename F>
double gauss_split(const QuadRule& gl, std::vector<double> breaks, F&& f) {
  breaks.push_back(-kTailCut);
  breaks.push_back(kTailCut);
  std::sort(breaks.begin(), breaks.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i] < -kTailCut || breaks[i + 1] > kTailCut) continue;
    if (breaks[i + 1] - breaks[i] <= 0.0) continue;
    acc += gauss_cell(gl, breaks[i], breaks[i + 1], f);
  }
  return acc;
}

// preimages of the activation kinks under z -> scale * z + shift
std::vector<double> kink_preimages(const std::vector<double>& kinks, double scale, double shift) {
  std::vector<double> out;
  if (scale == 0.0) return out;
  out.reserve(kinks.size());
  for (double k : kinks) {
    const double z = (k - shift) / scale;
    if (std::abs(z) < kTailCut) out.push_back(z);
  }
  return out;
}

// E[phi(c1 Z) phi(c2 Z)] for a single shared Gaussian factor.
double one_dim_expectation(const Activation& act, double c1, double c2, int nodes) {
  const auto ks = act.kinks();
  auto f = [&](double z) { return act(c1 * z) * act(c2 * z); };
  if (act.kind() == Activation::Kind::Id) {
    const QuadRule& gh = cached_rule(nodes, true);
    double acc = 0.0;
    for (int i = 0; i < gh.nodes.size(); ++i) acc += gh.weights[i] * f(gh.nodes[i]);
    return acc;
  }
  std::vector<double> breaks = kink_preimages(ks, c1, 0.0);
  const auto more = kink_preimages(ks, c2, 0.0);
  breaks.insert(breaks.end(), more.begin(), more.end());
  return gauss_split(cached_rule(std::min(nodes, kPanelNodeCap), false), std::move(breaks), f);
}

}  // namespace

double v_phi_quadrature(const Activation& act, const Psd2& sigma, int nodes) {
  if (nodes < 10) throw input_error("v_phi_quadrature: nodes must be >= 10");
  sigma.validate();
  const double alpha = std::sqrt(std::max(0.0, sigma.v11));
  const double beta = std::sqrt(std::max(0.0, sigma.v22));
  const double g = gamma_of(sigma);
  const double c = std::sqrt(std::max(0.0, 1.0 - g * g));

  if (alpha == 0.0 && beta == 0.0) return act(0.0) * act(0.0);
  // one factor degenerate: E[phi(0) phi(. Z)]
  if (alpha == 0.0) return one_dim_expectation(act, 0.0, beta, nodes);
  if (beta == 0.0) return one_dim_expectation(act, alpha, 0.0, nodes);
  if (c == 0.0) return one_dim_expectation(act, alpha, g * beta, nodes);

  // The identity is a polynomial, so tensor Gauss-Hermite is exact for it.
  // Everything else goes through the kink-split composite Gauss-Legendre
  // rule: plain Gauss-Hermite stalls near 1e-4 on the ReLU kink and only
  // reaches ~2e-8 at 200 nodes for erf, while the composite rule is at
  // machine precision for both.
  if (act.kind() == Activation::Kind::Id) {
    const QuadRule& gh = cached_rule(nodes, true);
    const int n = static_cast<int>(gh.nodes.size());
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z1 = gh.nodes[i];
      const double f1 = act(alpha * z1);
      double inner = 0.0;
      for (int j = 0; j < n; ++j)
        inner += gh.weights[j] * act(beta * (g * z1 + c * gh.nodes[j]));
      acc += gh.weights[i] * f1 * inner;
    }
    return acc;
  }

  // iterated rule: outer in z1 split where alpha*z1 crosses a kink, inner in
  // z2 split where beta*(g*z1 + c*z2) does
  const auto ks = act.kinks();
  const QuadRule& gl = cached_rule(std::min(nodes, kPanelNodeCap), false);
  auto outer = [&](double z1) {
    const double f1 = act(alpha * z1);
    if (f1 == 0.0) return 0.0;
    std::vector<double> inner_breaks = kink_preimages(ks, beta * c, beta * g * z1);
    const double inner = gauss_split(gl, std::move(inner_breaks),
                                     [&](double z2) { return act(beta * (g * z1 + c * z2)); });
    return f1 * inner;
  };
  return gauss_split(gl, kink_preimages(ks, alpha, 0.0), outer);
}

double v_phi(const Activation& act, const Psd2& sigma) {
  sigma.validate();
  switch (act.kind()) {
    case Activation::Kind::Id:
      return sigma.v12;
    case Activation::Kind::ReLU: {
      const double s = std::sqrt(std::max(0.0, sigma.v11 * sigma.v22));
      if (s == 0.0) return 0.0;
      const double g = gamma_of(sigma);
      // (s/2pi)(pi g + sqrt(1-g^2) - g acos g); continuous rewriting of the
      // arc-cosine form, finite at g = 0
      return s / (2.0 * kPi) * (kPi * g + std::sqrt(std::max(0.0, 1.0 - g * g)) - g * std::acos(g));
    }
    case Activation::Kind::Erf: {
      const double den = std::sqrt((0.5 + sigma.v11) * (0.5 + sigma.v22));
      return 2.0 / kPi * std::asin(clamp_unit(sigma.v12 / den));
    }
    case Activation::Kind::Tabulated:
      return v_phi_quadrature(act, sigma, 200);
  }
  return 0.0;
}

QuadRule gauss_hermite(int n) {
  if (n < 1) throw input_error("gauss_hermite: n must be >= 1");
  return cached_rule(n, true);
}

QuadRule gauss_legendre(int n) {
  if (n < 1) throw input_error("gauss_legendre: n must be >= 1");
  return cached_rule(n, false);
}

}  // namespace nsk
