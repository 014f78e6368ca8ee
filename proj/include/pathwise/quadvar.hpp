#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "pathwise/paths.hpp"

namespace pathwise {

/// Level-n quadratic covariation at time t, taken verbatim from the
/// Lebesgue-partition sum: sum_k S^i_{pi_k ^ t, pi_{k+1} ^ t} S^j_{...}
/// over the merged level-n partition, including the partial last term.
Matrix qv_level(const SampledPath& path, int level, double t);

/// Time-indexed symmetric d x d covariation matrices [S^i, S^j]_t and their
/// trace |[S]|_t.
///
/// Samples live on the path grid joined with the merged partition times.
/// Each sample holds the sum over partition intervals completed by that time,
/// and values between samples are linear in t. This makes the diagonal
/// non-decreasing and every increment positive semi-definite. At partition
/// times it agrees exactly with qv_level. Elsewhere it omits the partial
/// term, whose size is below d * (2 * 2^-n)^2.
class QVMatrixPath {
 public:
  QVMatrixPath(SampledPath path, std::vector<double> times, Matrix flat, int level, bool converged,
               std::size_t partition_size);

  const SampledPath& path() const noexcept { return path_; }
  std::size_t dim() const noexcept { return path_.dim(); }
  std::span<const double> times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  int level_used() const noexcept { return level_; }
  bool converged() const noexcept { return converged_; }
  std::size_t partition_size() const noexcept { return partition_size_; }

  /// Uniform distances between consecutive levels visited by qv(); entry k
  /// is the distance between level k and k + 1.
  const std::vector<double>& level_distances() const noexcept { return distances_; }
  void set_level_distances(std::vector<double> d) { distances_ = std::move(d); }

  Matrix matrix(std::size_t k) const;
  Matrix at(double t) const;
  double trace(std::size_t k) const { return trace_[k]; }
  double trace_at(double t) const;
  const std::vector<double>& traces() const noexcept { return trace_; }
  /// Row-major d*d entries per sample.
  const Matrix& flat() const noexcept { return flat_; }

 private:
  std::size_t locate(double t) const;

  SampledPath path_;
  std::vector<double> times_;
  Matrix flat_;
  std::vector<double> trace_;
  int level_;
  bool converged_;
  std::size_t partition_size_;
  std::vector<double> distances_;
};

/// QV matrix path at a fixed level. Always flagged converged: the level was
/// chosen by the caller.
QVMatrixPath qv_path(const SampledPath& path, int level);

struct QVOptions {
  double tol = 1e-4;
  int n_max = 20;
  /// Refuse to build a level whose estimated partition exceeds this many
  /// points; the search stops there, unconverged.
  std::size_t max_points = std::size_t{1} << 22;
};

/// Raises the level until the uniform distance between levels n and n+1
/// drops below tol, and returns level n. Otherwise stops at n_max or the
/// point budget and returns the result flagged unconverged.
QVMatrixPath qv(const SampledPath& path, const QVOptions& options = {});

/// sup over t of the max-norm difference of two QV matrix paths.
double uniform_distance(const QVMatrixPath& a, const QVMatrixPath& b);

/// |[S]|_t.
double qv_trace(const QVMatrixPath& qv, double t);

/// `t,q_11,q_12,...,q_dd,trace`
void write_qv_csv(std::ostream& out, const QVMatrixPath& qv);

}  // namespace pathwise
