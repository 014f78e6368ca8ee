#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "pathwise/paths.hpp"

namespace pathwise {

/// The n-th Lebesgue partition: successive first times a scalar moves by
/// exactly 2^-n from its value at the previous partition time.
///
/// Only finitely many crossings exist on a sampled path, so every computed
/// partition ends with `exhausted` set: all later partition times are +inf.
struct Partition {
  int level = 0;
  std::vector<double> times;  // strictly increasing, times.front() == 0
  bool exhausted = false;
};

/// Level-n partition of a scalar piecewise-linear function given by its
/// samples. Crossings on each linear segment are solved in closed form;
/// several crossings inside one segment are all emitted, in order.
Partition scalar_partition(std::span<const double> times, std::span<const double> values, int level);

/// Partition generated by coordinate `coord` (0-based).
Partition coordinate_partition(const SampledPath& path, std::size_t coord, int level);

/// Partition generated by the scalar omega^i + omega^j, i != j (0-based).
Partition pair_partition(const SampledPath& path, std::size_t i, std::size_t j, int level);

/// Union of all coordinate and pair partitions, duplicates collapsed.
Partition merged_partition(const SampledPath& path, int level);

/// Sorted union of the partition times with `extra_times`.
Partition refine_with(const Partition& partition, std::span<const double> extra_times);

/// Largest n with 2^-n >= the largest single-step coordinate increment of
/// the path, i.e. the finest level that does not resolve the linear pieces
/// between samples. 0 for constant paths.
int resolution_level(const SampledPath& path);

void write_partition_csv(std::ostream& out, const Partition& partition);

}  // namespace pathwise
