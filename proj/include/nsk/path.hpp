#ifndef NSK_PATH_HPP
#define NSK_PATH_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace nsk {

// Uniform or user-supplied partition 0 = t_0 < ... < t_M = 1.
struct Partition {
  std::vector<double> points;

  static Partition uniform(int depth);

  int depth() const { return static_cast<int>(points.size()) - 1; }
  double mesh() const;
  void validate() const;
};

// d-dimensional path on [0, 1], linear between knots, basepoint x(0) = 0.
// Immutable after construction; safe to share across threads.
class PiecewiseLinearPath {
 public:
  // times: strictly increasing, times.front() == 0, times.back() == 1.
  // values: one row per knot, values.row(0) == 0.
  PiecewiseLinearPath(std::vector<double> times, Eigen::MatrixXd values);

  int dim() const { return static_cast<int>(values_.cols()); }
  int num_knots() const { return static_cast<int>(times_.size()); }
  const std::vector<double>& times() const { return times_; }
  const Eigen::MatrixXd& values() const { return values_; }

  Eigen::VectorXd value_at(double t) const;

  // Slope of the interval containing t; right interval at interior knots,
  // last interval at t = 1.
  Eigen::VectorXd derivative_at(double t) const;

  // x(b) - x(a).
  Eigen::VectorXd increment(double a, double b) const;

  // Path with all values multiplied by c (times unchanged).
  PiecewiseLinearPath scaled(double c) const;

 private:
  int segment_index(double t) const;

  std::vector<double> times_;
  Eigen::MatrixXd values_;
};

// <x'(s), y'(t)>. Throws input_error on dimension mismatch.
double deriv_inner(const PiecewiseLinearPath& x, const PiecewiseLinearPath& y,
                   double s, double t);

struct PathNorms {
  double one_var;   // integral of |x'(t)|
  double l2_deriv;  // sqrt of integral of |x'(t)|^2
};

PathNorms norms(const PiecewiseLinearPath& path);

// Exact integral of <x'(u), y'(u)> du over [0, t], summed over the overlap
// cells of the two knot sets.
double integral_deriv_inner(const PiecewiseLinearPath& x,
                            const PiecewiseLinearPath& y, double t);

// Parse "time,v1,...,vd" rows: sort by time, rescale times to [0,1],
// subtract the first value. Optional header row auto-detected.
PiecewiseLinearPath ingest_csv(std::istream& in);
PiecewiseLinearPath ingest_csv_file(const std::string& filename);

enum class SynthKind { Line, Paper2d, CosExp, GpRbf };

SynthKind parse_synth_kind(const std::string& name);

// Synthetic benchmark paths. `direction` only applies to Line (defaults to
// the first basis vector). GpRbf draws d independent channels from the
// zero-mean GP with kernel exp(-5(s-t)^2) on n points over [-2,2], then
// rescales time to [0,1] and shifts the basepoint to 0.
PiecewiseLinearPath synth_path(SynthKind kind, int dim, int n_samples,
                               std::uint64_t seed = 0,
                               const Eigen::VectorXd& direction = Eigen::VectorXd());

}  // namespace nsk

#endif
