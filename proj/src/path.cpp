#include "nsk/path.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nsk/errors.hpp"
#include "nsk/rng.hpp"

namespace nsk {

Partition Partition::uniform(int depth) {
  if (depth < 1) throw input_error("partition depth must be >= 1");
  Partition p;
  p.points.resize(depth + 1);
  for (int i = 0; i <= depth; ++i) p.points[i] = static_cast<double>(i) / depth;
  p.points.back() = 1.0;
  return p;
}

double Partition::mesh() const {
  double m = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) m = std::max(m, points[i] - points[i - 1]);
  return m;
}

void Partition::validate() const {
  if (points.size() < 2) throw input_error("partition needs at least two points");
  if (points.front() != 0.0 || points.back() != 1.0)
    throw input_error("partition must start at 0 and end at 1");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i] <= points[i - 1]) throw input_error("partition points must be strictly increasing");
}

PiecewiseLinearPath::PiecewiseLinearPath(std::vector<double> times, Eigen::MatrixXd values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() < 2) throw input_error("path needs at least two knots");
  if (static_cast<int>(times_.size()) != values_.rows())
    throw input_error("path: times/values length mismatch");
  if (values_.cols() < 1) throw input_error("path dimension must be >= 1");
  if (times_.front() != 0.0 || times_.back() != 1.0)
    throw input_error("path times must span [0, 1] exactly");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (times_[i] <= times_[i - 1]) throw input_error("path times must be strictly increasing");
  if (values_.row(0).cwiseAbs().maxCoeff() != 0.0)
    throw input_error("path must start at the zero vector");
}

int PiecewiseLinearPath::segment_index(double t) const {
  if (t < 0.0 || t > 1.0) throw input_error("path parameter out of [0, 1]");
  if (t >= times_[times_.size() - 2]) return static_cast<int>(times_.size()) - 2;
  // first knot strictly greater than t, then step back
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<int>(it - times_.begin()) - 1;
}

Eigen::VectorXd PiecewiseLinearPath::value_at(double t) const {
  const int k = segment_index(t);
  const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
  return values_.row(k).transpose() + w * (values_.row(k + 1) - values_.row(k)).transpose();
}

Eigen::VectorXd PiecewiseLinearPath::derivative_at(double t) const {
  const int k = segment_index(t);
  return (values_.row(k + 1) - values_.row(k)).transpose() / (times_[k + 1] - times_[k]);
}

Eigen::VectorXd PiecewiseLinearPath::increment(double a, double b) const {
  if (a > b) throw input_error("increment: a must be <= b");
  return value_at(b) - value_at(a);
}

PiecewiseLinearPath PiecewiseLinearPath::scaled(double c) const {
  return PiecewiseLinearPath(times_, values_ * c);
}

double deriv_inner(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                   double s, double t) {
  if (x.dim() != y.dim()) throw input_error("deriv_inner: paths have different dimensions");
  return x.derivative_at(s).dot(y.derivative_at(t));
}

PathNorms norms(const PiecewiseLinearPath& path) {
  const auto& times = path.times();
  const auto& vals = path.values();
  double one_var = 0.0;
  double l2 = 0.0;
  for (int k = 0; k + 1 < path.num_knots(); ++k) {
    const double dt = times[k + 1] - times[k];
    const double seg = (vals.row(k + 1) - vals.row(k)).norm();
    one_var += seg;
    l2 += seg * seg / dt;
  }
  return PathNorms{one_var, std::sqrt(l2)};
}

double integral_deriv_inner(const PiecewiseLinearPath& x,
                            const PiecewiseLinearPath& y, double t) {
  if (x.dim() != y.dim()) throw input_error("integral_deriv_inner: dimension mismatch");
  if (t < 0.0 || t > 1.0) throw input_error("integral_deriv_inner: t out of [0, 1]");
  // merged knot grid truncated at t
  std::vector<double> grid;
  grid.reserve(x.num_knots() + y.num_knots());
  for (double u : x.times())
    if (u < t) grid.push_back(u);
  for (double u : y.times())
    if (u < t) grid.push_back(u);
  grid.push_back(t);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double a = grid[i], b = grid[i + 1];
    const double mid = 0.5 * (a + b);
    acc += x.derivative_at(mid).dot(y.derivative_at(mid)) * (b - a);
  }
  return acc;
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    // trim
    const auto b = cell.find_first_not_of(" \t\r");
    if (b == std::string::npos) return false;
    const auto e = cell.find_last_not_of(" \t\r");
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(cell.substr(b, e - b + 1), &pos);
    } catch (...) {
      return false;
    }
    if (pos != e - b + 1) return false;
    out.push_back(v);
  }
  return !out.empty();
}

PiecewiseLinearPath from_raw_rows(std::vector<std::vector<double>> rows) {
  if (rows.size() < 2) throw input_error("csv: need at least two data rows");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a[0] < b[0]; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i][0] == rows[i - 1][0]) throw input_error("csv: duplicate timestamps");
  const int d = static_cast<int>(rows[0].size()) - 1;
  const double t0 = rows.front()[0];
  const double span = rows.back()[0] - t0;
  std::vector<double> times(rows.size());
  Eigen::MatrixXd values(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    times[i] = (rows[i][0] - t0) / span;
    for (int j = 0; j < d; ++j) values(i, j) = rows[i][j + 1] - rows[0][j + 1];
  }
  times.front() = 0.0;
  times.back() = 1.0;
  values.row(0).setZero();
  return PiecewiseLinearPath(std::move(times), std::move(values));
}

}  // namespace

PiecewiseLinearPath ingest_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  std::string line;
  bool first = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!line.empty() && line[0] == '#') continue;
    if (!parse_row(line, row)) {
      if (first) {  // header row
        first = false;
        continue;
      }
      throw input_error("csv: non-numeric field in row: " + line);
    }
    first = false;
    if (row.size() < 2) throw input_error("csv: rows need a time and at least one value column");
    if (width == 0)
      width = row.size();
    else if (row.size() != width)
      throw input_error("csv: inconsistent column count");
    rows.push_back(row);
  }
  return from_raw_rows(std::move(rows));
}

PiecewiseLinearPath ingest_csv_file(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw input_error("cannot open path file: " + filename);
  return ingest_csv(in);
}

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "line") return SynthKind::Line;
  if (name == "paper_2d") return SynthKind::Paper2d;
  if (name == "cos_exp") return SynthKind::CosExp;
  if (name == "gp_rbf") return SynthKind::GpRbf;
  throw input_error("unknown synthetic path kind: " + name);
}

namespace {

PiecewiseLinearPath sample_gp_rbf(int dim, int n, std::uint64_t seed) {
  // sample grid on [-2, 2], kernel exp(-5 (s-t)^2)
  Eigen::VectorXd grid(n);
  for (int i = 0; i < n; ++i) grid[i] = -2.0 + 4.0 * i / (n - 1);
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double g = grid[i] - grid[j];
      gram(i, j) = std::exp(-5.0 * g * g);
    }
  Eigen::MatrixXd chol;
  double jitter = 1e-10;
  for (;;) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram + jitter * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      chol = llt.matrixL();
      break;
    }
    jitter *= 2.0;
    if (jitter > 1e-6) throw numerical_error("gp_rbf: RBF Gram not PSD even with jitter 1e-6");
  }
  SplitStream root(seed);
  std::vector<double> times(n);
  for (int i = 0; i < n; ++i) times[i] = static_cast<double>(i) / (n - 1);
  times.back() = 1.0;
  Eigen::MatrixXd values(n, dim);
  for (int c = 0; c < dim; ++c) {
    SplitStream s = root.child(c);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = s.normal();
    values.col(c) = chol * z;
  }
  for (int c = 0; c < dim; ++c) values.col(c).array() -= values(0, c);
  values.row(0).setZero();
  return PiecewiseLinearPath(std::move(times), std::move(values));
}

}  // namespace

PiecewiseLinearPath synth_path(SynthKind kind, int dim, int n_samples,
                               std::uint64_t seed, const Eigen::VectorXd& direction) {
  if (n_samples < 2) throw input_error("synth_path: n_samples must be >= 2");
  switch (kind) {
    case SynthKind::Line: {
      Eigen::VectorXd v = direction;
      if (v.size() == 0) {
        v = Eigen::VectorXd::Zero(dim);
        v[0] = 1.0;
      }
      if (v.size() != dim) throw input_error("synth_path: direction length != dim");
      std::vector<double> times(n_samples);
      Eigen::MatrixXd values(n_samples, dim);
      for (int i = 0; i < n_samples; ++i) {
        times[i] = static_cast<double>(i) / (n_samples - 1);
        values.row(i) = times[i] * v.transpose();
      }
      times.back() = 1.0;
      values.row(n_samples - 1) = v.transpose();
      return PiecewiseLinearPath(std::move(times), std::move(values));
    }
    case SynthKind::Paper2d: {
      if (dim != 2) throw input_error("synth_path: paper_2d is 2-dimensional");
      std::vector<double> times(n_samples);
      Eigen::MatrixXd values(n_samples, 2);
      for (int i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / (n_samples - 1);
        times[i] = t;
        values(i, 0) = std::sin(15.0 * t);
        values(i, 1) = std::cos(30.0 * t) + 3.0 * std::exp(t) - 4.0;
      }
      times.back() = 1.0;
      values.row(0).setZero();
      return PiecewiseLinearPath(std::move(times), std::move(values));
    }
    case SynthKind::CosExp: {
      if (dim != 1) throw input_error("synth_path: cos_exp is 1-dimensional");
      std::vector<double> times(n_samples);
      Eigen::MatrixXd values(n_samples, 1);
      for (int i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / (n_samples - 1);
        times[i] = t;
        values(i, 0) = std::cos(15.0 * t) + 3.0 * std::exp(t) - 4.0;
      }
      times.back() = 1.0;
      values.row(0).setZero();
      return PiecewiseLinearPath(std::move(times), std::move(values));
    }
    case SynthKind::GpRbf:
      return sample_gp_rbf(dim, n_samples, seed);
  }
  throw input_error("synth_path: unknown kind");
}

}  // namespace nsk
