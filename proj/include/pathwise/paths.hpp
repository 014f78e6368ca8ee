#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pathwise {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A continuous d-dimensional path sampled on a finite grid
/// 0 = t_0 < t_1 < ... < t_N = T and extended by linear interpolation.
///
/// Storage is shared and immutable, so copies are cheap and two copies of
/// the same path compare as identical in O(1).
class SampledPath {
 public:
  /// `values` has one row per grid time and one column per coordinate.
  /// Throws ValidationError unless the grid starts at 0, is strictly
  /// increasing, has at least two points and all values are finite.
  SampledPath(std::vector<double> times, Matrix values);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(data_->values.cols()); }
  std::size_t steps() const noexcept { return data_->times.size() - 1; }
  std::size_t size() const noexcept { return data_->times.size(); }
  double horizon() const noexcept { return data_->times.back(); }

  std::span<const double> times() const noexcept { return data_->times; }
  const Matrix& values() const noexcept { return data_->values; }

  double time(std::size_t k) const { return data_->times[k]; }
  Vector value(std::size_t k) const { return data_->values.row(static_cast<Eigen::Index>(k)).transpose(); }
  double value(std::size_t k, std::size_t coord) const {
    return data_->values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(coord));
  }

  /// Linear interpolation; exact stored value on grid points. DomainError
  /// outside [0, T].
  Vector eval(double t) const;
  double eval(double t, std::size_t coord) const;

  /// Index k of the segment [t_k, t_{k+1}] containing t (k = N-1 for t = T).
  std::size_t segment(double t) const;

  /// The path restricted to [0, t]; appends the interpolated point when t is
  /// off-grid. Requires t > 0.
  SampledPath prefix(double t) const;

  /// Scalar path built from a linear combination of coordinates.
  SampledPath combine(std::span<const double> weights) const;

  /// Same grid and bit-identical values.
  bool same_as(const SampledPath& other) const;

 private:
  struct Data {
    std::vector<double> times;
    Matrix values;
  };
  std::shared_ptr<const Data> data_;
};

/// A process sampled on the grid of some path, m-valued, interpolated
/// linearly in time like the path itself.
class AdaptedProcess {
 public:
  AdaptedProcess(std::vector<double> times, Matrix values, bool non_anticipating = true);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  std::size_t size() const noexcept { return times_.size(); }
  std::span<const double> times() const noexcept { return times_; }
  const Matrix& values() const noexcept { return values_; }
  bool non_anticipating() const noexcept { return non_anticipating_; }

  Vector value(std::size_t k) const { return values_.row(static_cast<Eigen::Index>(k)).transpose(); }
  Vector eval(double t) const;

 private:
  std::vector<double> times_;
  Matrix values_;
  bool non_anticipating_;
};

struct RandomWalkSpec {
  std::uint64_t seed = 1;
  std::size_t steps = 1024;
  double horizon = 1.0;
  std::size_t dim = 1;
  double vol = 1.0;
};

/// Uniform grid t_k = kT/N with increments +-vol*sqrt(T/N) per coordinate.
/// The sign of step k in coordinate i is the top bit of the (k*d + i)-th
/// output of std::mt19937_64 seeded with `seed` (set bit = up), so fixtures
/// are reproducible across platforms.
SampledPath generate_random_walk(const RandomWalkSpec& spec);

/// CSV with header `t,x1,...,xd`. ParseError carries the line number.
SampledPath load_path(std::istream& in);
void save_path(std::ostream& out, const SampledPath& path);

/// S_{u,v} = S_v - S_u on the interpolant.
Vector increment(const SampledPath& path, double u, double v);

/// sup_{s<=t} |G_s| (Euclidean norm); the interpolant is linear between
/// samples so the sup is attained at a grid point or at t.
double running_sup(const AdaptedProcess& process, double t);

/// Running sup at every grid point.
std::vector<double> running_sup_series(const AdaptedProcess& process);

}  // namespace pathwise
