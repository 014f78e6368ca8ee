#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "pathwise/paths.hpp"
#include "pathwise/quadvar.hpp"

namespace pathwise {

/// A simple strategy realized on one path: rebalancing times
/// 0 = tau_0 <= tau_1 <= ... <= tau_m <= T and positions g_0..g_m in R^d,
/// g_l held on (tau_l, tau_{l+1}] (g_m up to T).
///
/// Matrix-valued strategies are carried as d realizations, one per row.
class StrategyRealization {
 public:
  StrategyRealization(SampledPath path, std::vector<double> times, Matrix positions);

  const SampledPath& path() const noexcept { return path_; }
  std::size_t dim() const noexcept { return path_.dim(); }
  std::size_t size() const noexcept { return times_.size(); }
  std::span<const double> times() const noexcept { return times_; }
  const Matrix& positions() const noexcept { return positions_; }
  Vector position(std::size_t l) const { return positions_.row(static_cast<Eigen::Index>(l)).transpose(); }

  /// Index of the last rebalancing time <= t.
  std::size_t index_after(double t) const;
  /// Position decided at or before t, held just after t.
  Vector position_after(double t) const { return position(index_after(t)); }
  /// G_t: the position held on the interval (tau_l, tau_{l+1}] containing t;
  /// g_0 at t = 0.
  Vector position_at(double t) const;

  /// (G.S)_t = sum_l g_l . S_{tau_l ^ t, tau_{l+1} ^ t}.
  double value_at(double t) const;
  /// Cumulative gains at each rebalancing time.
  const std::vector<double>& gains() const noexcept { return gains_; }

  /// G*_t = sup_{s<=t} |G_s|.
  double sup_norm(double t) const;

 private:
  SampledPath path_;
  std::vector<double> times_;
  Matrix positions_;
  std::vector<double> gains_;
  std::vector<double> sup_;  // max |g_j| over j <= l
};

/// Non-anticipating trading rule. Implementations may only read the path on
/// [0, t] when asked about time t; the prefix-replay tests enforce this.
class StrategyRule {
 public:
  virtual ~StrategyRule() = default;

  /// First rebalancing time strictly after `after`, or nothing.
  virtual std::optional<double> next_time(const SampledPath& path, double after) const = 0;
  /// Position taken at time t.
  virtual Vector position(const SampledPath& path, double t) const = 0;

  /// Rebalancing times in (0, T]. The default loops over next_time and
  /// throws ValidationError once more than `cap` times have been produced.
  virtual std::vector<double> rebalancing_times(const SampledPath& path, std::size_t cap) const;

  /// Full realization on `path`. The default queries rebalancing_times and
  /// then position at each time; rules whose positions are cheaper to build
  /// in one sweep override this.
  virtual StrategyRealization realize_on(const SampledPath& path, std::size_t cap) const;
};

using PositionFn = std::function<Vector(const SampledPath&, double)>;
using NextTimeFn = std::function<std::optional<double>(const SampledPath&, double)>;

inline constexpr std::size_t kDefaultRebalanceCap = std::size_t{1} << 24;

StrategyRealization realize(const StrategyRule& rule, const SampledPath& path,
                            std::size_t cap = kDefaultRebalanceCap);

/// Holds a fixed position from time 0 on.
class BuyAndHoldRule : public StrategyRule {
 public:
  explicit BuyAndHoldRule(Vector g) : g_(std::move(g)) {}
  std::optional<double> next_time(const SampledPath&, double) const override { return std::nullopt; }
  Vector position(const SampledPath&, double) const override { return g_; }
  std::vector<double> rebalancing_times(const SampledPath&, std::size_t) const override { return {}; }

 private:
  Vector g_;
};

/// Rebalances at the merged Lebesgue partition times of a given level.
class LebesgueRule : public StrategyRule {
 public:
  LebesgueRule(int level, PositionFn fn) : level_(level), fn_(std::move(fn)) {}
  std::optional<double> next_time(const SampledPath& path, double after) const override;
  Vector position(const SampledPath& path, double t) const override { return fn_(path, t); }
  std::vector<double> rebalancing_times(const SampledPath& path, std::size_t cap) const override;

 private:
  int level_;
  PositionFn fn_;
};

/// Rebalances at every `stride`-th grid time of the path.
class GridRule : public StrategyRule {
 public:
  GridRule(std::size_t stride, PositionFn fn);
  std::optional<double> next_time(const SampledPath& path, double after) const override;
  Vector position(const SampledPath& path, double t) const override { return fn_(path, t); }

 private:
  std::size_t stride_;
  PositionFn fn_;
};

/// Both the stopping rule and the positions supplied as callables.
class CallbackRule : public StrategyRule {
 public:
  CallbackRule(NextTimeFn next, PositionFn fn) : next_(std::move(next)), fn_(std::move(fn)) {}
  std::optional<double> next_time(const SampledPath& path, double after) const override {
    return next_(path, after);
  }
  Vector position(const SampledPath& path, double t) const override { return fn_(path, t); }

 private:
  NextTimeFn next_;
  PositionFn fn_;
};

double integrate(const StrategyRealization& real, double t);

/// Vector of row integrals of a matrix-valued strategy.
Vector integrate_rows(std::span<const StrategyRealization> rows, double t);

/// int_0^t G (x) G d[S] = sum_l g_l^T ([S]_{tau_{l+1} ^ t} - [S]_{tau_l ^ t}) g_l.
/// ValidationError when qv was computed on another path.
double integral_qv(const StrategyRealization& real, const QVMatrixPath& qv, double t);

/// integral_qv at each of the given times (any order), in one pass over the
/// schedule.
std::vector<double> integral_qv_series(const StrategyRealization& real, const QVMatrixPath& qv,
                                       std::span<const double> times);

/// G^Q_t = G_t 1{|[S]|_t <= Q}. The first time the trace exceeds Q becomes a
/// rebalancing time with zero position afterwards.
StrategyRealization truncate(const StrategyRealization& real, double Q, const QVMatrixPath& qv);

/// |[(G.S)]|_t = sum over rows of integral_qv. Needs exactly d rows.
double qv_norm(std::span<const StrategyRealization> rows, const QVMatrixPath& qv, double t);

/// Same strategy with extra rebalancing times that keep the held position.
StrategyRealization refine(const StrategyRealization& real, std::span<const double> extra_times);

/// a G + b H on the union of both schedules.
StrategyRealization linear_combination(double a, const StrategyRealization& g, double b,
                                       const StrategyRealization& h);

/// Times at which integrals are checked: path grid joined with tau's.
std::vector<double> check_times(const StrategyRealization& real);

struct AdmissibilityCheck {
  double lambda = 0.0;
  bool admissible = true;
  double min_value = 0.0;
  std::optional<double> first_violation;
};

/// (G.S)_t >= -lambda at every path grid time and rebalancing time.
AdmissibilityCheck check_admissible(const StrategyRealization& real, double lambda);

/// `l,tau,g1,...,gd`
void write_realization_csv(std::ostream& out, const StrategyRealization& real);

}  // namespace pathwise
