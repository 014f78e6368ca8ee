#include "pathwise/paths.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "pathwise/csv.hpp"
#include "pathwise/error.hpp"

namespace pathwise {

namespace {

void validate_grid(const std::vector<double>& times) {
  if (times.size() < 2) throw ValidationError("path needs at least two grid points");
  if (times.front() != 0.0) throw ValidationError("grid must start at t = 0");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1]) || !std::isfinite(times[k])) {
      throw ValidationError("grid times must be strictly increasing (index " + std::to_string(k) + ")");
    }
  }
}

// Segment index for t in [times.front(), times.back()].
std::size_t locate(std::span<const double> times, double t) {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  auto k = static_cast<std::size_t>(it - times.begin());
  if (k == 0) return 0;
  return std::min(k - 1, times.size() - 2);
}

}  // namespace

SampledPath::SampledPath(std::vector<double> times, Matrix values) {
  validate_grid(times);
  if (static_cast<std::size_t>(values.rows()) != times.size()) {
    throw ValidationError("path has " + std::to_string(values.rows()) + " value rows for " +
                          std::to_string(times.size()) + " grid times");
  }
  if (values.cols() < 1) throw ValidationError("path dimension must be at least 1");
  if (!values.allFinite()) throw ValidationError("path values must be finite");
  data_ = std::make_shared<const Data>(Data{std::move(times), std::move(values)});
}

std::size_t SampledPath::segment(double t) const {
  if (!(t >= 0.0 && t <= horizon())) {
    throw DomainError("time " + csv::format(t) + " outside [0, " + csv::format(horizon()) + "]");
  }
  return locate(data_->times, t);
}

double SampledPath::eval(double t, std::size_t coord) const {
  if (coord >= dim()) throw DomainError("coordinate index out of range");
  const auto k = segment(t);
  const auto& ts = data_->times;
  const auto& v = data_->values;
  const auto ki = static_cast<Eigen::Index>(k);
  const auto c = static_cast<Eigen::Index>(coord);
  if (t == ts[k]) return v(ki, c);
  if (t == ts[k + 1]) return v(ki + 1, c);
  const double w = (t - ts[k]) / (ts[k + 1] - ts[k]);
  return v(ki, c) + w * (v(ki + 1, c) - v(ki, c));
}

Vector SampledPath::eval(double t) const {
  const auto k = segment(t);
  const auto& ts = data_->times;
  const auto& v = data_->values;
  const auto ki = static_cast<Eigen::Index>(k);
  if (t == ts[k]) return v.row(ki).transpose();
  if (t == ts[k + 1]) return v.row(ki + 1).transpose();
  const double w = (t - ts[k]) / (ts[k + 1] - ts[k]);
  return (v.row(ki) + w * (v.row(ki + 1) - v.row(ki))).transpose();
}

SampledPath SampledPath::prefix(double t) const {
  if (!(t > 0.0)) throw DomainError("prefix end must be positive");
  const auto k = segment(t);
  if (t == horizon()) return *this;
  const auto& ts = data_->times;
  const std::size_t keep = (t == ts[k + 1]) ? k + 2 : k + 1;
  std::vector<double> times(ts.begin(), ts.begin() + static_cast<std::ptrdiff_t>(keep));
  Matrix values = data_->values.topRows(static_cast<Eigen::Index>(keep));
  if (times.back() < t) {
    times.push_back(t);
    values.conservativeResize(values.rows() + 1, Eigen::NoChange);
    values.row(values.rows() - 1) = eval(t).transpose();
  }
  return SampledPath(std::move(times), std::move(values));
}

SampledPath SampledPath::combine(std::span<const double> weights) const {
  if (weights.size() != dim()) throw DomainError("weight count must equal path dimension");
  Eigen::Map<const Vector> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  Matrix out = data_->values * w;
  return SampledPath(data_->times, std::move(out));
}

bool SampledPath::same_as(const SampledPath& other) const {
  if (data_ == other.data_) return true;
  return data_->times == other.data_->times && data_->values == other.data_->values;
}

AdaptedProcess::AdaptedProcess(std::vector<double> times, Matrix values, bool non_anticipating)
    : times_(std::move(times)), values_(std::move(values)), non_anticipating_(non_anticipating) {
  if (times_.empty()) throw ValidationError("process needs at least one sample");
  if (static_cast<std::size_t>(values_.rows()) != times_.size()) {
    throw ValidationError("process value rows must match its grid");
  }
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) throw ValidationError("process grid must be strictly increasing");
  }
}

Vector AdaptedProcess::eval(double t) const {
  if (!(t >= times_.front() && t <= times_.back())) {
    throw DomainError("time " + csv::format(t) + " outside process grid");
  }
  if (times_.size() == 1) return value(0);
  const auto k = locate(times_, t);
  const auto ki = static_cast<Eigen::Index>(k);
  if (t == times_[k]) return values_.row(ki).transpose();
  if (t == times_[k + 1]) return values_.row(ki + 1).transpose();
  const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
  return (values_.row(ki) + w * (values_.row(ki + 1) - values_.row(ki))).transpose();
}

SampledPath generate_random_walk(const RandomWalkSpec& spec) {
  if (spec.steps == 0) throw ValidationError("random walk needs at least one step");
  if (!(spec.horizon > 0.0)) throw ValidationError("horizon must be positive");
  if (!(spec.vol >= 0.0)) throw ValidationError("volatility must be non-negative");
  if (spec.dim == 0) throw ValidationError("dimension must be at least 1");

  const std::size_t n = spec.steps;
  const double step = spec.vol * std::sqrt(spec.horizon / static_cast<double>(n));
  std::vector<double> times(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    times[k] = spec.horizon * static_cast<double>(k) / static_cast<double>(n);
  }
  times[n] = spec.horizon;

  const auto d = static_cast<Eigen::Index>(spec.dim);
  Matrix values = Matrix::Zero(static_cast<Eigen::Index>(n + 1), d);
  std::mt19937_64 gen(spec.seed);
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < d; ++i) {
      const bool up = (gen() >> 63) != 0;
      values(row + 1, i) = values(row, i) + (up ? step : -step);
    }
  }
  return SampledPath(std::move(times), std::move(values));
}

SampledPath load_path(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t d = 0;
  bool have_header = false;
  std::vector<double> times;
  std::vector<double> flat;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = csv::split(line);
    if (!have_header) {
      if (fields.size() < 2 || fields[0] != "t") {
        throw ParseError(lineno, "expected header `t,x1,...,xd`");
      }
      for (std::size_t i = 1; i < fields.size(); ++i) {
        if (fields[i] != "x" + std::to_string(i)) {
          throw ParseError(lineno, "header column " + std::to_string(i + 1) + " must be x" + std::to_string(i));
        }
      }
      d = fields.size() - 1;
      have_header = true;
      continue;
    }
    if (fields.size() != d + 1) {
      throw ParseError(lineno, "expected " + std::to_string(d + 1) + " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i <= d; ++i) {
      const auto value = csv::parse(fields[i]);
      if (!value) throw ParseError(lineno, "malformed number `" + std::string(fields[i]) + "`");
      if (i == 0) {
        if (!times.empty() && !(*value > times.back())) {
          throw ValidationError("line " + std::to_string(lineno) + ": times must be strictly increasing");
        }
        times.push_back(*value);
      } else {
        flat.push_back(*value);
      }
    }
  }
  if (!have_header) throw ParseError(lineno, "empty input");
  if (times.size() < 2) throw ValidationError("path file needs at least two rows");

  Matrix values(static_cast<Eigen::Index>(times.size()), static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < times.size(); ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = flat[k * d + i];
    }
  }
  return SampledPath(std::move(times), std::move(values));
}

void save_path(std::ostream& out, const SampledPath& path) {
  out << 't';
  for (std::size_t i = 1; i <= path.dim(); ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t k = 0; k < path.size(); ++k) {
    out << csv::format(path.time(k));
    for (std::size_t i = 0; i < path.dim(); ++i) out << ',' << csv::format(path.value(k, i));
    out << '\n';
  }
}

Vector increment(const SampledPath& path, double u, double v) { return path.eval(v) - path.eval(u); }

double running_sup(const AdaptedProcess& process, double t) {
  const auto ts = process.times();
  if (!(t >= ts.front() && t <= ts.back())) {
    throw DomainError("time " + csv::format(t) + " outside process grid");
  }
  double best = 0.0;
  for (std::size_t k = 0; k < ts.size() && ts[k] <= t; ++k) {
    best = std::max(best, process.values().row(static_cast<Eigen::Index>(k)).norm());
  }
  return std::max(best, process.eval(t).norm());
}

std::vector<double> running_sup_series(const AdaptedProcess& process) {
  std::vector<double> out(process.size());
  double best = 0.0;
  for (std::size_t k = 0; k < process.size(); ++k) {
    best = std::max(best, process.values().row(static_cast<Eigen::Index>(k)).norm());
    out[k] = best;
  }
  return out;
}

}  // namespace pathwise
