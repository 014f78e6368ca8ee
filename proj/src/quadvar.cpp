#include "pathwise/quadvar.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "pathwise/csv.hpp"
#include "pathwise/error.hpp"
#include "pathwise/lebesgue.hpp"

namespace pathwise {

namespace {

std::vector<double> sorted_union(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Crossing count estimate for the merged partition at `level`.
double estimated_points(const SampledPath& path, int level) {
  const auto& v = path.values();
  const auto d = v.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      double tv = 0.0;
      for (Eigen::Index k = 0; k + 1 < v.rows(); ++k) {
        const double step = (i == j) ? v(k + 1, i) - v(k, i) : (v(k + 1, i) + v(k + 1, j)) - (v(k, i) + v(k, j));
        tv += std::abs(step);
      }
      total += std::ldexp(tv, level);
    }
  }
  return total + static_cast<double>(path.size());
}

}  // namespace

QVMatrixPath::QVMatrixPath(SampledPath path, std::vector<double> times, Matrix flat, int level, bool converged,
                           std::size_t partition_size)
    : path_(std::move(path)),
      times_(std::move(times)),
      flat_(std::move(flat)),
      level_(level),
      converged_(converged),
      partition_size_(partition_size) {
  const auto d = static_cast<Eigen::Index>(path_.dim());
  if (flat_.rows() != static_cast<Eigen::Index>(times_.size()) || flat_.cols() != d * d) {
    throw ValidationError("QV storage does not match its grid");
  }
  trace_.resize(times_.size());
  for (std::size_t k = 0; k < times_.size(); ++k) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) s += flat_(static_cast<Eigen::Index>(k), i * d + i);
    trace_[k] = s;
  }
}

std::size_t QVMatrixPath::locate(double t) const {
  if (!(t >= times_.front() && t <= times_.back())) {
    throw DomainError("time " + csv::format(t) + " outside QV grid");
  }
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  auto k = static_cast<std::size_t>(it - times_.begin());
  if (k == 0) return 0;
  return std::min(k - 1, times_.size() - 2);
}

Matrix QVMatrixPath::matrix(std::size_t k) const {
  const auto d = static_cast<Eigen::Index>(dim());
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = flat_(static_cast<Eigen::Index>(k), i * d + j);
  return m;
}

Matrix QVMatrixPath::at(double t) const {
  if (times_.size() == 1) return matrix(0);
  const auto k = locate(t);
  if (t == times_[k]) return matrix(k);
  if (t == times_[k + 1]) return matrix(k + 1);
  const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
  return matrix(k) + w * (matrix(k + 1) - matrix(k));
}

double QVMatrixPath::trace_at(double t) const {
  if (times_.size() == 1) return trace_[0];
  const auto k = locate(t);
  if (t == times_[k]) return trace_[k];
  if (t == times_[k + 1]) return trace_[k + 1];
  const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
  return trace_[k] + w * (trace_[k + 1] - trace_[k]);
}

Matrix qv_level(const SampledPath& path, int level, double t) {
  const auto partition = merged_partition(path, level);
  const auto d = static_cast<Eigen::Index>(path.dim());
  Matrix out = Matrix::Zero(d, d);
  const auto& p = partition.times;
  for (std::size_t k = 0; k < p.size() && p[k] < t; ++k) {
    const double end = (k + 1 < p.size()) ? std::min(p[k + 1], t) : t;
    const Vector inc = increment(path, p[k], end);
    out += inc * inc.transpose();
  }
  return out;
}

QVMatrixPath qv_path(const SampledPath& path, int level) {
  const auto partition = merged_partition(path, level);
  const auto& p = partition.times;
  const auto d = static_cast<Eigen::Index>(path.dim());

  // Completed sums at each partition time.
  std::vector<Vector> values(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) values[k] = path.eval(p[k]);
  Matrix completed(static_cast<Eigen::Index>(p.size()), d * d);
  Matrix acc = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k > 0) {
      const Vector inc = values[k] - values[k - 1];
      acc += inc * inc.transpose();
    }
    completed.row(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::RowVectorXd>(acc.data(), d * d);
  }

  auto grid = sorted_union(path.times(), p);
  Matrix flat(static_cast<Eigen::Index>(grid.size()), d * d);
  std::size_t k = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    while (k + 1 < p.size() && p[k + 1] <= grid[g]) ++k;
    flat.row(static_cast<Eigen::Index>(g)) = completed.row(static_cast<Eigen::Index>(k));
  }
  // acc is symmetric, so column-major storage equals the row-major layout.
  return QVMatrixPath(path, std::move(grid), std::move(flat), level, true, p.size());
}

double uniform_distance(const QVMatrixPath& a, const QVMatrixPath& b) {
  if (a.dim() != b.dim()) throw ValidationError("QV paths of different dimension");
  const auto grid = sorted_union(a.times(), b.times());
  double worst = 0.0;
  for (double t : grid) {
    if (t > a.times().back() || t > b.times().back()) continue;
    worst = std::max(worst, (a.at(t) - b.at(t)).cwiseAbs().maxCoeff());
  }
  return worst;
}

QVMatrixPath qv(const SampledPath& path, const QVOptions& options) {
  if (!(options.tol > 0.0)) throw DomainError("QV tolerance must be positive");
  if (options.n_max < 0) throw DomainError("QV level cap must be non-negative");

  std::vector<double> distances;
  QVMatrixPath current = qv_path(path, 0);
  for (int n = 0; n < options.n_max; ++n) {
    if (estimated_points(path, n + 1) > static_cast<double>(options.max_points)) break;
    QVMatrixPath next = qv_path(path, n + 1);
    const double dist = uniform_distance(current, next);
    distances.push_back(dist);
    if (dist < options.tol) {
      QVMatrixPath out(path, std::vector<double>(current.times().begin(), current.times().end()), current.flat(), n,
                       true, current.partition_size());
      out.set_level_distances(std::move(distances));
      return out;
    }
    current = std::move(next);
  }
  QVMatrixPath out(path, std::vector<double>(current.times().begin(), current.times().end()), current.flat(),
                   current.level_used(), false, current.partition_size());
  out.set_level_distances(std::move(distances));
  return out;
}

double qv_trace(const QVMatrixPath& qv, double t) { return qv.trace_at(t); }

void write_qv_csv(std::ostream& out, const QVMatrixPath& qv) {
  const auto d = qv.dim();
  out << 't';
  for (std::size_t i = 1; i <= d; ++i)
    for (std::size_t j = 1; j <= d; ++j) out << ",q_" << i << j;
  out << ",trace\n";
  for (std::size_t k = 0; k < qv.size(); ++k) {
    out << csv::format(qv.times()[k]);
    for (Eigen::Index c = 0; c < qv.flat().cols(); ++c) out << ',' << csv::format(qv.flat()(static_cast<Eigen::Index>(k), c));
    out << ',' << csv::format(qv.trace(k)) << '\n';
  }
}

}  // namespace pathwise
