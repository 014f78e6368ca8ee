#include "pathwise/lebesgue.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>

#include "pathwise/csv.hpp"
#include "pathwise/error.hpp"

namespace pathwise {

namespace {

constexpr int kMaxLevel = 60;

void check_level(int level) {
  if (level < 0 || level > kMaxLevel) {
    throw DomainError("partition level must lie in [0, " + std::to_string(kMaxLevel) + "]");
  }
}

std::vector<double> column(const SampledPath& path, std::size_t coord) {
  std::vector<double> out(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) out[k] = path.value(k, coord);
  return out;
}

// Crossing time of `level_value` on the segment (ta, xa) -> (tb, xb). The
// endpoints are returned verbatim so that crossings at grid points coincide
// bit-exactly across coordinates.
double crossing_time(double ta, double xa, double tb, double xb, double level_value) {
  if (level_value == xa) return ta;
  if (level_value == xb) return tb;
  const double frac = (level_value - xa) / (xb - xa);
  if (frac >= 1.0) return tb;
  return ta + frac * (tb - ta);
}

}  // namespace

Partition scalar_partition(std::span<const double> times, std::span<const double> values, int level) {
  check_level(level);
  if (times.size() != values.size() || times.empty()) {
    throw ValidationError("partition input needs matching, non-empty times and values");
  }
  const double delta = std::ldexp(1.0, -level);
  const double origin = values[0];
  std::int64_t index = 0;  // current anchor is origin + index * delta

  Partition out;
  out.level = level;
  out.times.push_back(times[0]);

  auto push = [&out](double t) {
    if (t > out.times.back()) out.times.push_back(t);
  };

  for (std::size_t j = 0; j + 1 < times.size(); ++j) {
    const double ta = times[j];
    const double tb = times[j + 1];
    const double xa = values[j];
    const double xb = values[j + 1];
    if (xb > xa) {
      double up = origin + static_cast<double>(index + 1) * delta;
      while (xb >= up) {
        push(crossing_time(ta, xa, tb, xb, up));
        ++index;
        up = origin + static_cast<double>(index + 1) * delta;
      }
    } else if (xb < xa) {
      double down = origin + static_cast<double>(index - 1) * delta;
      while (xb <= down) {
        push(crossing_time(ta, xa, tb, xb, down));
        --index;
        down = origin + static_cast<double>(index - 1) * delta;
      }
    }
  }
  out.exhausted = true;
  return out;
}

Partition coordinate_partition(const SampledPath& path, std::size_t coord, int level) {
  if (coord >= path.dim()) {
    throw DomainError("coordinate " + std::to_string(coord) + " out of range for dimension " +
                      std::to_string(path.dim()));
  }
  const auto values = column(path, coord);
  return scalar_partition(path.times(), values, level);
}

Partition pair_partition(const SampledPath& path, std::size_t i, std::size_t j, int level) {
  if (i == j) throw DomainError("pair partition needs two distinct coordinates");
  if (i >= path.dim() || j >= path.dim()) throw DomainError("coordinate index out of range");
  std::vector<double> values(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) values[k] = path.value(k, i) + path.value(k, j);
  return scalar_partition(path.times(), values, level);
}

Partition merged_partition(const SampledPath& path, int level) {
  const std::size_t d = path.dim();
  if (d == 1) return coordinate_partition(path, 0, level);

  std::vector<double> all;
  for (std::size_t i = 0; i < d; ++i) {
    const auto p = coordinate_partition(path, i, level);
    all.insert(all.end(), p.times.begin(), p.times.end());
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const auto p = pair_partition(path, i, j, level);
      all.insert(all.end(), p.times.begin(), p.times.end());
    }
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return Partition{level, std::move(all), true};
}

Partition refine_with(const Partition& partition, std::span<const double> extra_times) {
  Partition out = partition;
  for (double t : extra_times) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("refinement times must be finite and non-negative");
  }
  out.times.insert(out.times.end(), extra_times.begin(), extra_times.end());
  std::sort(out.times.begin(), out.times.end());
  out.times.erase(std::unique(out.times.begin(), out.times.end()), out.times.end());
  return out;
}

int resolution_level(const SampledPath& path) {
  const auto& v = path.values();
  double h = 0.0;
  for (Eigen::Index k = 0; k + 1 < v.rows(); ++k) {
    h = std::max(h, (v.row(k + 1) - v.row(k)).cwiseAbs().maxCoeff());
  }
  if (h == 0.0) return 0;
  int exponent = 0;
  const double mantissa = std::frexp(h, &exponent);  // h = mantissa * 2^exponent, mantissa in [0.5, 1)
  const int n = (mantissa == 0.5) ? 1 - exponent : -exponent;
  return std::clamp(n, 0, kMaxLevel);
}

void write_partition_csv(std::ostream& out, const Partition& partition) {
  out << "k,time\n";
  for (std::size_t k = 0; k < partition.times.size(); ++k) {
    out << k << ',' << csv::format(partition.times[k]) << '\n';
  }
}

}  // namespace pathwise
