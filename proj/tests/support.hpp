#pragma once

// Fixtures and slow-but-obvious reference implementations shared by the
// unit and acceptance tests. Nothing here calls into the library's
// partition or covariation code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pathwise/paths.hpp"

namespace testing_support {

using pathwise::Matrix;
using pathwise::SampledPath;

inline SampledPath scalar_path(std::vector<double> t, const std::vector<double>& x) {
  Matrix v(static_cast<Eigen::Index>(x.size()), 1);
  for (std::size_t k = 0; k < x.size(); ++k) v(static_cast<Eigen::Index>(k), 0) = x[k];
  return SampledPath(std::move(t), v);
}

inline SampledPath path2(std::vector<double> t, const std::vector<double>& x1, const std::vector<double>& x2) {
  Matrix v(static_cast<Eigen::Index>(x1.size()), 2);
  for (std::size_t k = 0; k < x1.size(); ++k) {
    v(static_cast<Eigen::Index>(k), 0) = x1[k];
    v(static_cast<Eigen::Index>(k), 1) = x2[k];
  }
  return SampledPath(std::move(t), v);
}

// Successive first times |x(t) - x(tau_k)| reaches 2^-n on the linear
// interpolant, located by bisection on each segment. x(tau_k) is taken as the
// exact level x_0 + j 2^-n it sits on.
inline std::vector<double> crossing_oracle(const std::vector<double>& t, const std::vector<double>& x, int level) {
  const double h = std::ldexp(1.0, -level);
  std::vector<double> out{t[0]};
  long j = 0;
  for (std::size_t s = 0; s + 1 < t.size(); ++s) {
    double from = t[s];
    auto value = [&](double u) { return x[s] + (x[s + 1] - x[s]) * (u - t[s]) / (t[s + 1] - t[s]); };
    for (;;) {
      const double ref = x[0] + static_cast<double>(j) * h;
      auto hit = [&](double u) { return std::abs(value(u) - ref) >= h; };
      const double end_value = x[s + 1];
      if (!(std::abs(end_value - ref) >= h)) break;
      double lo = from, hi = t[s + 1];
      if (hit(lo)) {
        hi = lo;
      } else {
        for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          (hit(mid) ? hi : lo) = mid;
        }
      }
      j += end_value > ref ? 1 : -1;
      if (hi > out.back()) out.push_back(hi);
      from = hi;
    }
  }
  return out;
}

inline std::vector<double> column(const SampledPath& p, std::size_t i) {
  std::vector<double> c(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) c[k] = p.value(k, i);
  return c;
}

inline std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

// Union of oracle crossing times over coordinates and coordinate pairs,
// merged with a tolerance so that bisection jitter does not duplicate times.
inline std::vector<double> merged_oracle(const SampledPath& p, int level) {
  std::vector<double> all;
  const auto t = vec(p.times());
  const std::size_t d = p.dim();
  for (std::size_t i = 0; i < d; ++i) {
    const auto c = crossing_oracle(t, column(p, i), level);
    all.insert(all.end(), c.begin(), c.end());
    for (std::size_t j = i + 1; j < d; ++j) {
      auto s = column(p, i);
      const auto cj = column(p, j);
      for (std::size_t k = 0; k < s.size(); ++k) s[k] += cj[k];
      const auto cs = crossing_oracle(t, s, level);
      all.insert(all.end(), cs.begin(), cs.end());
    }
  }
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double u : all)
    if (out.empty() || u - out.back() > 1e-12) out.push_back(u);
  return out;
}

// Direct evaluation of sum_k S^i_{pi_k ^ t, pi_{k+1} ^ t} S^j_{...} over a
// supplied partition (plus the partial last term), by interpolating the path at the clipped times.
inline Matrix qv_direct(const SampledPath& p, const std::vector<double>& partition, double t) {
  const auto d = static_cast<Eigen::Index>(p.dim());
  Matrix out = Matrix::Zero(d, d);
  // After the last crossing the next time is +inf, which clips to t.
  std::vector<double> ext = partition;
  ext.push_back(p.horizon());
  for (std::size_t k = 0; k + 1 < ext.size(); ++k) {
    const double a = std::min(ext[k], t);
    const double b = std::min(ext[k + 1], t);
    if (b <= a) continue;
    const pathwise::Vector inc = p.eval(b) - p.eval(a);
    out += inc * inc.transpose();
  }
  return out;
}

}  // namespace testing_support
