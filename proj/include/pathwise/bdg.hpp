#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "pathwise/paths.hpp"
#include "pathwise/quadvar.hpp"
#include "pathwise/strategy.hpp"

namespace pathwise {

inline constexpr double kDefaultC1 = 6.0;

struct DiscreteStats {
  std::vector<double> running_max;  // x*_m = max_{k<=m} |x_k|
  std::vector<double> qv;           // [x]_m = x_0^2 + sum_{k<m} (x_{k+1} - x_k)^2
};

/// DomainError on an empty sequence.
DiscreteStats discrete_stats(std::span<const double> x);

/// f_k = 2 x_k / sqrt([x]_k + (x*_k)^2), and 0 where both vanish.
/// |f_k| <= 2 and f_k only reads x_0..x_k. With this f,
///   x*_N <= 6 sqrt([x]_N) + (f.x)_N          for every sequence, and
///   sqrt([x]_N) <= 3 x*_N - (f.x)_N / 2      (the matching lower bound).
std::vector<double> hedge_sequence(std::span<const double> x);

/// (f.x)_m = sum_{k<m} f_k (x_{k+1} - x_k), for every m.
std::vector<double> discrete_gains(std::span<const double> f, std::span<const double> x);

struct BDGReport {
  // At the final index N.
  bool upper_ok = true;     // x*_N <= c1 sqrt([x]_N) + (f.x)_N
  bool lower_ok = true;     // x*_N >= sqrt([x]_N) + (f.x)_N
  bool bs_lower_ok = true;  // sqrt([x]_N) <= 3 x*_N - (f.x)_N / 2
  double upper_margin = 0.0;
  double lower_margin = 0.0;
  double bs_lower_margin = 0.0;
  // Worst over every prefix 0..N (each prefix is itself a sequence).
  double worst_upper_margin = 0.0;
  double worst_lower_margin = 0.0;
  double worst_bs_lower_margin = 0.0;
  std::size_t upper_violations = 0;
  std::size_t lower_violations = 0;
  std::size_t bs_lower_violations = 0;
  double max_abs_f = 0.0;
};

/// Margins are "right side minus left side" style: >= 0 means the inequality
/// holds. A rounding allowance of 1e-12 (1 + x*) is granted.
BDGReport verify_pathwise_bdg(std::span<const double> x, double c1 = kDefaultC1);

struct PhiConstruction {
  StrategyRealization phi;
  std::vector<double> sigma;  // merged partition joined with G's rebalancing times
  std::vector<double> x;      // x_m = (G.S)_{sigma_m}, built incrementally
  std::vector<double> f;      // hedge_sequence(x)
};

/// The hedge Phi^n: just after sigma_m it holds f_m(x_0..x_m) G_{sigma_m}, where
/// G_{sigma_m} is the position G holds on (sigma_m, sigma_{m+1}].
PhiConstruction build_phi_strategy(const StrategyRealization& g, int level);
PhiConstruction build_phi_strategy(const StrategyRule& g_rule, const SampledPath& path, int level);

/// Phi^n of another rule, usable wherever a rule is expected.
class PhiRule : public StrategyRule {
 public:
  PhiRule(const StrategyRule& g_rule, int level) : g_rule_(g_rule), level_(level) {}
  std::optional<double> next_time(const SampledPath& path, double after) const override;
  Vector position(const SampledPath& path, double t) const override;
  std::vector<double> rebalancing_times(const SampledPath& path, std::size_t cap) const override;
  StrategyRealization realize_on(const SampledPath& path, std::size_t cap) const override;

 private:
  const StrategyRule& g_rule_;
  int level_;
};

/// sqrt([(G.S)]_T) with [S] taken at `level`; the least capital the
/// domination check accepts.
double required_lambda(const StrategyRealization& g, int level);

struct DominationReport {
  int level = 0;
  double lambda = 0.0;
  double c1 = kDefaultC1;
  std::vector<double> times;    // path grid
  std::vector<double> margins;  // c1 lambda + (Phi.S)_t - (G.S)*_t
  std::vector<double> slack;    // 3 2^-n sqrt(d) G*_t
  std::vector<double> phi_gains;  // (Phi.S)_t
  bool pass = true;             // margins + slack >= 0 everywhere
  double worst = 0.0;           // min of margins + slack
  std::optional<double> first_violation;
  // |(Phi.S)_t - (f.x)_{m(t)}| <= 2 sqrt(d) 2^-n G*_t at every grid t.
  bool discretization_ok = true;
  double discretization_worst = 0.0;  // max of lhs - rhs
  // max_t |x_{m(t)} - (G.S)_t|
  double integral_gap = 0.0;
};

/// Throws PreconditionError naming the required capital when
/// lambda < required_lambda(g, level).
DominationReport verify_domination(const StrategyRealization& g, int level, double lambda, double c1 = kDefaultC1);
DominationReport verify_domination(const StrategyRule& g_rule, const SampledPath& path, int level, double lambda,
                                   double c1 = kDefaultC1);

struct MultidimReport {
  std::vector<DominationReport> rows;
  bool triangle_ok = true;  // |(G.S)|*_t <= sum_i (G^i.S)*_t
  double triangle_worst = 0.0;
  // c1 d lambda + sum_i ((Phi^i.S)_t + slack_i) - |(G.S)|*_t
  std::vector<double> margins;
  bool overall_ok = true;
  bool pass = true;
};

/// Vector version for d strategy rows. Needs lambda >= sqrt(|[(G.S)]|_T).
MultidimReport multidim_bdg_check(std::span<const StrategyRealization> rows, int level, double lambda,
                                  double c1 = kDefaultC1);

struct SuperhedgeEntry {
  std::size_t path = 0;
  std::size_t strategy = 0;
  bool admissible = true;
  double min_margin = 0.0;  // min over grid t of lambda + (H.S)_t - Z_t
};

struct SuperhedgeReport {
  std::vector<SuperhedgeEntry> entries;
  std::vector<bool> path_pass;  // decided by the last strategy of the sequence
  bool pass = true;
};

/// Checks lambda + (H^n.S)_t >= Z_t at every grid t of every path for the
/// supplied strategy sequence. payoffs[p] is Z on the grid of paths[p].
SuperhedgeReport empirical_superhedge_check(std::span<const AdaptedProcess> payoffs,
                                            std::span<const SampledPath> paths,
                                            std::span<const StrategyRule* const> strategies, double lambda);

/// Deterministic fuzz input number `index` of a sweep: lengths 1..max_length,
/// alternating Gaussian walks, +-1 walks, growing zigzags, zigzags that
/// break out, and walks from a random offset.
std::vector<double> fuzz_sequence(std::uint64_t seed, std::size_t index, std::size_t max_length);
std::string fuzz_kind(std::size_t index);

struct BDGSweep {
  std::size_t sequences = 0;
  std::size_t upper_violations = 0;     // at the final index
  std::size_t lower_violations = 0;
  std::size_t bs_lower_violations = 0;
  std::size_t prefix_upper_violations = 0;  // over every prefix
  double max_abs_f = 0.0;
  double worst_upper_margin = 0.0;
  double worst_lower_margin = 0.0;
  double worst_bs_lower_margin = 0.0;
};

BDGSweep bdg_sweep(std::uint64_t seed, std::size_t count, std::size_t max_length, double c1 = kDefaultC1);

struct DominationSweepConfig {
  std::uint64_t seed = 1;
  std::size_t paths = 100;
  std::size_t steps = 4096;
  double vol = 1.0 / 64.0;  // one step = 2^-12, so level 12 is the grid resolution
  int level = 12;
  double c1 = kDefaultC1;
};

struct DominationSweepEntry {
  std::uint64_t seed = 0;
  std::string strategy;
  double lambda = 0.0;
  bool pass = false;
  double worst = 0.0;
  bool discretization_ok = false;
  double discretization_worst = 0.0;
  double integral_gap = 0.0;
};

struct DominationSweep {
  std::vector<DominationSweepEntry> entries;
  std::size_t passed = 0;
  std::size_t discretization_passed = 0;
};

/// Bounded strategy number `index` of a sweep, for d = 1. Kinds rotate
/// through buy-and-hold, positions that are smooth functions of omega(t)
/// rebalanced on coarser Lebesgue partitions, and positions rebalanced on
/// every 64th grid time.
std::unique_ptr<StrategyRule> sweep_strategy(std::size_t index, int level, std::string* name = nullptr);

DominationSweep domination_sweep(const DominationSweepConfig& config);

}  // namespace pathwise
