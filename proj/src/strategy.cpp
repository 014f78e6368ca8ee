#include "pathwise/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "pathwise/csv.hpp"
#include "pathwise/error.hpp"
#include "pathwise/lebesgue.hpp"

namespace pathwise {

namespace {

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

void require_same_path(const StrategyRealization& real, const QVMatrixPath& qv) {
  if (!real.path().same_as(qv.path())) {
    throw ValidationError("quadratic variation was computed on a different path");
  }
}

}  // namespace

StrategyRealization::StrategyRealization(SampledPath path, std::vector<double> times, Matrix positions)
    : path_(std::move(path)), times_(std::move(times)), positions_(std::move(positions)) {
  if (times_.empty() || times_.front() != 0.0) throw ValidationError("strategy schedule must start at 0");
  for (std::size_t l = 1; l < times_.size(); ++l) {
    if (!(times_[l] >= times_[l - 1])) throw ValidationError("rebalancing times must be non-decreasing");
  }
  if (times_.back() > path_.horizon()) throw ValidationError("rebalancing time beyond the horizon");
  if (positions_.rows() != static_cast<Eigen::Index>(times_.size()) ||
      positions_.cols() != static_cast<Eigen::Index>(path_.dim())) {
    throw ValidationError("strategy needs one position of dimension " + std::to_string(path_.dim()) +
                          " per rebalancing time");
  }
  if (!positions_.allFinite()) throw ValidationError("positions must be finite");

  const std::size_t m = times_.size();
  gains_.assign(m, 0.0);
  Vector prev = path_.eval(0.0);
  for (std::size_t l = 0; l + 1 < m; ++l) {
    const Vector next = path_.eval(times_[l + 1]);
    gains_[l + 1] = gains_[l] + position(l).dot(next - prev);
    prev = next;
  }

  const std::size_t first_held = index_after(0.0);
  sup_.assign(m, 0.0);
  double best = 0.0;
  for (std::size_t l = 0; l < m; ++l) {
    const double end = (l + 1 < m) ? times_[l + 1] : path_.horizon();
    if (l == first_held || times_[l] < end) best = std::max(best, positions_.row(static_cast<Eigen::Index>(l)).norm());
    sup_[l] = best;
  }
}

std::size_t StrategyRealization::index_after(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return it == times_.begin() ? 0 : static_cast<std::size_t>(it - times_.begin()) - 1;
}

Vector StrategyRealization::position_at(double t) const {
  if (t <= 0.0) return position(index_after(0.0));
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  return position(static_cast<std::size_t>(it - times_.begin()) - 1);
}

double StrategyRealization::value_at(double t) const {
  const Vector st = path_.eval(t);  // range check
  const std::size_t l = index_after(t);
  return gains_[l] + position(l).dot(st - path_.eval(times_[l]));
}

double StrategyRealization::sup_norm(double t) const {
  if (!(t >= 0.0 && t <= path_.horizon())) throw DomainError("time " + csv::format(t) + " outside [0, T]");
  if (t == 0.0) return position(index_after(0.0)).norm();
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  return sup_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

std::vector<double> StrategyRule::rebalancing_times(const SampledPath& path, std::size_t cap) const {
  std::vector<double> out;
  double t = 0.0;
  while (auto next = next_time(path, t)) {
    if (!(*next > t)) throw ValidationError("stopping rule returned a non-increasing time");
    if (*next > path.horizon()) break;
    out.push_back(*next);
    if (out.size() > cap) {
      throw ValidationError("stopping rule exceeded the cap of " + std::to_string(cap) + " rebalancing times");
    }
    t = *next;
  }
  return out;
}

StrategyRealization realize(const StrategyRule& rule, const SampledPath& path, std::size_t cap) {
  return rule.realize_on(path, cap);
}

StrategyRealization StrategyRule::realize_on(const SampledPath& path, std::size_t cap) const {
  const StrategyRule& rule = *this;
  std::vector<double> times{0.0};
  const auto rest = rule.rebalancing_times(path, cap);
  times.insert(times.end(), rest.begin(), rest.end());
  Matrix positions(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(path.dim()));
  for (std::size_t l = 0; l < times.size(); ++l) {
    const Vector g = rule.position(path, times[l]);
    if (g.size() != static_cast<Eigen::Index>(path.dim())) {
      throw ValidationError("rule returned a position of dimension " + std::to_string(g.size()));
    }
    positions.row(static_cast<Eigen::Index>(l)) = g.transpose();
  }
  return StrategyRealization(path, std::move(times), std::move(positions));
}

std::optional<double> LebesgueRule::next_time(const SampledPath& path, double after) const {
  const auto p = merged_partition(path, level_);
  auto it = std::upper_bound(p.times.begin(), p.times.end(), after);
  if (it == p.times.end()) return std::nullopt;
  return *it;
}

std::vector<double> LebesgueRule::rebalancing_times(const SampledPath& path, std::size_t cap) const {
  const auto p = merged_partition(path, level_);
  if (p.times.size() - 1 > cap) {
    throw ValidationError("stopping rule exceeded the cap of " + std::to_string(cap) + " rebalancing times");
  }
  return std::vector<double>(p.times.begin() + 1, p.times.end());
}

GridRule::GridRule(std::size_t stride, PositionFn fn) : stride_(stride), fn_(std::move(fn)) {
  if (stride_ == 0) throw DomainError("grid stride must be at least 1");
}

std::optional<double> GridRule::next_time(const SampledPath& path, double after) const {
  const auto ts = path.times();
  auto k = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), after) - ts.begin());
  k = (k + stride_ - 1) / stride_ * stride_;
  if (k >= ts.size()) return std::nullopt;
  return ts[k];
}

double integrate(const StrategyRealization& real, double t) { return real.value_at(t); }

Vector integrate_rows(std::span<const StrategyRealization> rows, double t) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = rows[i].value_at(t);
  return out;
}

double integral_qv(const StrategyRealization& real, const QVMatrixPath& qv, double t) {
  require_same_path(real, qv);
  if (!(t >= 0.0 && t <= real.path().horizon())) throw DomainError("time " + csv::format(t) + " outside [0, T]");
  const auto ts = real.times();
  double total = 0.0;
  for (std::size_t l = 0; l < ts.size() && ts[l] < t; ++l) {
    const double end = std::min(l + 1 < ts.size() ? ts[l + 1] : real.path().horizon(), t);
    if (!(end > ts[l])) continue;
    const Vector g = real.position(l);
    total += g.dot((qv.at(end) - qv.at(ts[l])) * g);
  }
  return total;
}

std::vector<double> integral_qv_series(const StrategyRealization& real, const QVMatrixPath& qv,
                                       std::span<const double> times) {
  require_same_path(real, qv);
  const auto ts = real.times();
  std::vector<double> cum(ts.size(), 0.0);
  for (std::size_t l = 0; l + 1 < ts.size(); ++l) {
    const Vector g = real.position(l);
    cum[l + 1] = cum[l] + (ts[l + 1] > ts[l] ? g.dot((qv.at(ts[l + 1]) - qv.at(ts[l])) * g) : 0.0);
  }
  std::vector<double> out(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    if (!(t >= 0.0 && t <= real.path().horizon())) throw DomainError("time " + csv::format(t) + " outside [0, T]");
    if (t == 0.0) {
      out[k] = 0.0;
      continue;
    }
    const auto l = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), t) - ts.begin()) - 1;
    const Vector g = real.position(l);
    out[k] = cum[l] + g.dot((qv.at(t) - qv.at(ts[l])) * g);
  }
  return out;
}

StrategyRealization truncate(const StrategyRealization& real, double Q, const QVMatrixPath& qv) {
  if (!(Q >= 0.0)) throw DomainError("truncation level must be non-negative");
  require_same_path(real, qv);
  const auto qt = qv.times();
  const auto& tr = qv.traces();
  std::size_t k = 0;
  while (k < tr.size() && !(tr[k] > Q)) ++k;
  if (k == tr.size()) return real;

  double cut = 0.0;
  if (k > 0) {
    const double w = (Q - tr[k - 1]) / (tr[k] - tr[k - 1]);
    cut = std::clamp(qt[k - 1] + w * (qt[k] - qt[k - 1]), qt[k - 1], qt[k]);
  }

  std::vector<double> times;
  std::vector<Vector> pos;
  const auto ts = real.times();
  for (std::size_t l = 0; l < ts.size() && ts[l] < cut; ++l) {
    times.push_back(ts[l]);
    pos.push_back(real.position(l));
  }
  times.push_back(cut);
  pos.push_back(Vector::Zero(static_cast<Eigen::Index>(real.dim())));
  Matrix positions(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(real.dim()));
  for (std::size_t l = 0; l < pos.size(); ++l) positions.row(static_cast<Eigen::Index>(l)) = pos[l].transpose();
  return StrategyRealization(real.path(), std::move(times), std::move(positions));
}

double qv_norm(std::span<const StrategyRealization> rows, const QVMatrixPath& qv, double t) {
  if (rows.size() != qv.dim()) {
    throw ValidationError("expected " + std::to_string(qv.dim()) + " strategy rows, got " +
                          std::to_string(rows.size()));
  }
  double total = 0.0;
  for (const auto& row : rows) total += integral_qv(row, qv, t);
  return total;
}

StrategyRealization refine(const StrategyRealization& real, std::span<const double> extra_times) {
  for (double t : extra_times) {
    if (!(t >= 0.0 && t <= real.path().horizon())) throw DomainError("refinement time outside [0, T]");
  }
  std::vector<double> all(real.times().begin(), real.times().end());
  all.insert(all.end(), extra_times.begin(), extra_times.end());
  all = sorted_unique(std::move(all));
  Matrix positions(static_cast<Eigen::Index>(all.size()), static_cast<Eigen::Index>(real.dim()));
  for (std::size_t l = 0; l < all.size(); ++l) {
    positions.row(static_cast<Eigen::Index>(l)) = real.position_after(all[l]).transpose();
  }
  return StrategyRealization(real.path(), std::move(all), std::move(positions));
}

StrategyRealization linear_combination(double a, const StrategyRealization& g, double b,
                                       const StrategyRealization& h) {
  if (!g.path().same_as(h.path())) throw ValidationError("strategies realized on different paths");
  std::vector<double> all(g.times().begin(), g.times().end());
  all.insert(all.end(), h.times().begin(), h.times().end());
  all = sorted_unique(std::move(all));
  Matrix positions(static_cast<Eigen::Index>(all.size()), static_cast<Eigen::Index>(g.dim()));
  for (std::size_t l = 0; l < all.size(); ++l) {
    positions.row(static_cast<Eigen::Index>(l)) = (a * g.position_after(all[l]) + b * h.position_after(all[l])).transpose();
  }
  return StrategyRealization(g.path(), std::move(all), std::move(positions));
}

std::vector<double> check_times(const StrategyRealization& real) {
  std::vector<double> all(real.path().times().begin(), real.path().times().end());
  all.insert(all.end(), real.times().begin(), real.times().end());
  return sorted_unique(std::move(all));
}

AdmissibilityCheck check_admissible(const StrategyRealization& real, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("admissibility level must be non-negative");
  AdmissibilityCheck out;
  out.lambda = lambda;
  out.min_value = 0.0;
  for (double t : check_times(real)) {
    const double v = real.value_at(t);
    out.min_value = std::min(out.min_value, v);
    if (v < -lambda && !out.first_violation) {
      out.admissible = false;
      out.first_violation = t;
    }
  }
  return out;
}

void write_realization_csv(std::ostream& out, const StrategyRealization& real) {
  out << "l,tau";
  for (std::size_t i = 1; i <= real.dim(); ++i) out << ",g" << i;
  out << '\n';
  for (std::size_t l = 0; l < real.size(); ++l) {
    out << l << ',' << csv::format(real.times()[l]);
    for (Eigen::Index i = 0; i < real.positions().cols(); ++i) {
      out << ',' << csv::format(real.positions()(static_cast<Eigen::Index>(l), i));
    }
    out << '\n';
  }
}

}  // namespace pathwise
