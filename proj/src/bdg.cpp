#include "pathwise/bdg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "pathwise/csv.hpp"
#include "pathwise/error.hpp"
#include "pathwise/lebesgue.hpp"

namespace pathwise {

namespace {

constexpr double kRoundoff = 1e-12;

std::size_t last_at_or_before(std::span<const double> ts, double t) {
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  return it == ts.begin() ? 0 : static_cast<std::size_t>(it - ts.begin()) - 1;
}

// Running sup of |(G.S)| sampled at the path grid. (G.S) is linear between
// grid points and rebalancing times, so those points carry the sup.
std::vector<double> integral_running_max(const StrategyRealization& g) {
  const auto grid = g.path().times();
  const auto all = check_times(g);
  std::vector<double> out(grid.size());
  double best = 0.0;
  std::size_t j = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    while (j < all.size() && all[j] <= grid[k]) best = std::max(best, std::abs(g.value_at(all[j++])));
    out[k] = best;
  }
  return out;
}

}  // namespace

DiscreteStats discrete_stats(std::span<const double> x) {
  if (x.empty()) throw DomainError("discrete statistics need a non-empty sequence");
  DiscreteStats out;
  out.running_max.resize(x.size());
  out.qv.resize(x.size());
  out.running_max[0] = std::abs(x[0]);
  out.qv[0] = x[0] * x[0];
  for (std::size_t k = 1; k < x.size(); ++k) {
    out.running_max[k] = std::max(out.running_max[k - 1], std::abs(x[k]));
    const double dx = x[k] - x[k - 1];
    out.qv[k] = out.qv[k - 1] + dx * dx;
  }
  return out;
}

std::vector<double> hedge_sequence(std::span<const double> x) {
  if (x.empty()) return {};
  const auto stats = discrete_stats(x);
  std::vector<double> f(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double den = std::sqrt(stats.qv[k] + stats.running_max[k] * stats.running_max[k]);
    f[k] = den > 0.0 ? 2.0 * x[k] / den : 0.0;
  }
  return f;
}

std::vector<double> discrete_gains(std::span<const double> f, std::span<const double> x) {
  if (f.size() != x.size()) throw ValidationError("hedge and sequence lengths differ");
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) out[k + 1] = out[k] + f[k] * (x[k + 1] - x[k]);
  return out;
}

BDGReport verify_pathwise_bdg(std::span<const double> x, double c1) {
  const auto stats = discrete_stats(x);
  const auto f = hedge_sequence(x);
  const auto gains = discrete_gains(f, x);
  BDGReport r;
  r.worst_upper_margin = r.worst_lower_margin = r.worst_bs_lower_margin = INFINITY;
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double xs = stats.running_max[m];
    const double root = std::sqrt(stats.qv[m]);
    const double tol = kRoundoff * (1.0 + xs + root);
    const double up = c1 * root + gains[m] - xs;
    const double low = xs - root - gains[m];
    const double bs = 3.0 * xs - 0.5 * gains[m] - root;
    r.worst_upper_margin = std::min(r.worst_upper_margin, up);
    r.worst_lower_margin = std::min(r.worst_lower_margin, low);
    r.worst_bs_lower_margin = std::min(r.worst_bs_lower_margin, bs);
    r.upper_violations += up < -tol;
    r.lower_violations += low < -tol;
    r.bs_lower_violations += bs < -tol;
    r.max_abs_f = std::max(r.max_abs_f, std::abs(f[m]));
    if (m + 1 == x.size()) {
      r.upper_margin = up;
      r.lower_margin = low;
      r.bs_lower_margin = bs;
      r.upper_ok = up >= -tol;
      r.lower_ok = low >= -tol;
      r.bs_lower_ok = bs >= -tol;
    }
  }
  return r;
}

PhiConstruction build_phi_strategy(const StrategyRealization& g, int level) {
  const auto& path = g.path();
  auto sigma = refine_with(merged_partition(path, level), g.times()).times;
  const std::size_t m = sigma.size();
  const auto d = static_cast<Eigen::Index>(path.dim());

  std::vector<double> x(m, 0.0);
  Matrix held(static_cast<Eigen::Index>(m), d);
  Vector prev = path.eval(sigma[0]);
  for (std::size_t k = 0; k < m; ++k) {
    held.row(static_cast<Eigen::Index>(k)) = g.position_after(sigma[k]).transpose();
    if (k + 1 < m) {
      const Vector next = path.eval(sigma[k + 1]);
      x[k + 1] = x[k] + held.row(static_cast<Eigen::Index>(k)).dot((next - prev).transpose());
      prev = next;
    }
  }
  auto f = hedge_sequence(x);
  Matrix positions = held;
  for (std::size_t k = 0; k < m; ++k) positions.row(static_cast<Eigen::Index>(k)) *= f[k];
  StrategyRealization phi(path, sigma, std::move(positions));
  return PhiConstruction{std::move(phi), std::move(sigma), std::move(x), std::move(f)};
}

PhiConstruction build_phi_strategy(const StrategyRule& g_rule, const SampledPath& path, int level) {
  return build_phi_strategy(realize(g_rule, path), level);
}

StrategyRealization PhiRule::realize_on(const SampledPath& path, std::size_t cap) const {
  return build_phi_strategy(realize(g_rule_, path, cap), level_).phi;
}

std::vector<double> PhiRule::rebalancing_times(const SampledPath& path, std::size_t cap) const {
  const auto phi = realize_on(path, cap);
  return std::vector<double>(phi.times().begin() + 1, phi.times().end());
}

std::optional<double> PhiRule::next_time(const SampledPath& path, double after) const {
  const auto phi = realize_on(path, kDefaultRebalanceCap);
  const auto ts = phi.times();
  auto it = std::upper_bound(ts.begin(), ts.end(), after);
  if (it == ts.end()) return std::nullopt;
  return *it;
}

Vector PhiRule::position(const SampledPath& path, double t) const {
  return realize_on(path, kDefaultRebalanceCap).position_after(t);
}

double required_lambda(const StrategyRealization& g, int level) {
  const auto qv = qv_path(g.path(), level);
  return std::sqrt(std::max(0.0, integral_qv(g, qv, g.path().horizon())));
}

DominationReport verify_domination(const StrategyRealization& g, int level, double lambda, double c1) {
  const double need = required_lambda(g, level);
  if (!(lambda >= need)) {
    throw PreconditionError("capital " + csv::format(lambda) + " is below the required sqrt([(G.S)]_T) = " +
                            csv::format(need));
  }
  const auto& path = g.path();
  const auto con = build_phi_strategy(g, level);
  const auto fx = discrete_gains(con.f, con.x);
  const auto gs_star = integral_running_max(g);
  const double delta = std::ldexp(1.0, -level);
  const double root_d = std::sqrt(static_cast<double>(path.dim()));

  DominationReport r;
  r.level = level;
  r.lambda = lambda;
  r.c1 = c1;
  r.times.assign(path.times().begin(), path.times().end());
  r.margins.resize(r.times.size());
  r.slack.resize(r.times.size());
  r.phi_gains.resize(r.times.size());
  r.worst = INFINITY;
  r.discretization_worst = -INFINITY;
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const double t = r.times[k];
    const double phi_s = con.phi.value_at(t);
    const double g_star = g.sup_norm(t);
    r.phi_gains[k] = phi_s;
    r.margins[k] = c1 * lambda + phi_s - gs_star[k];
    r.slack[k] = 3.0 * delta * root_d * g_star;
    const double total = r.margins[k] + r.slack[k];
    const double tol = kRoundoff * (1.0 + c1 * lambda + gs_star[k]);
    r.worst = std::min(r.worst, total);
    if (total < -tol && !r.first_violation) {
      r.pass = false;
      r.first_violation = t;
    }

    const std::size_t m = last_at_or_before(con.sigma, t);
    const double excess = std::abs(phi_s - fx[m]) - 2.0 * root_d * delta * g_star;
    r.discretization_worst = std::max(r.discretization_worst, excess);
    if (excess > kRoundoff * (1.0 + std::abs(fx[m]))) r.discretization_ok = false;
    r.integral_gap = std::max(r.integral_gap, std::abs(con.x[m] - g.value_at(t)));
  }
  return r;
}

DominationReport verify_domination(const StrategyRule& g_rule, const SampledPath& path, int level, double lambda,
                                   double c1) {
  return verify_domination(realize(g_rule, path), level, lambda, c1);
}

MultidimReport multidim_bdg_check(std::span<const StrategyRealization> rows, int level, double lambda, double c1) {
  if (rows.empty()) throw ValidationError("need at least one strategy row");
  const auto& path = rows[0].path();
  const std::size_t d = path.dim();
  if (rows.size() != d) {
    throw ValidationError("expected " + std::to_string(d) + " strategy rows, got " + std::to_string(rows.size()));
  }
  for (const auto& row : rows) {
    if (!row.path().same_as(path)) throw ValidationError("strategy rows realized on different paths");
  }
  const auto qv = qv_path(path, level);
  const double need = std::sqrt(std::max(0.0, qv_norm(rows, qv, path.horizon())));
  if (!(lambda >= need)) {
    throw PreconditionError("capital " + csv::format(lambda) + " is below the required sqrt(|[(G.S)]|_T) = " +
                            csv::format(need));
  }

  MultidimReport out;
  for (const auto& row : rows) {
    out.rows.push_back(verify_domination(row, level, lambda, c1));
    out.pass = out.pass && out.rows.back().pass;
  }

  std::vector<double> all(path.times().begin(), path.times().end());
  for (const auto& row : rows) all.insert(all.end(), row.times().begin(), row.times().end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  const auto grid = path.times();
  std::vector<double> row_max(d, 0.0);
  double vec_max = 0.0;
  out.margins.resize(grid.size());
  out.triangle_worst = -INFINITY;
  std::size_t j = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    while (j < all.size() && all[j] <= grid[k]) {
      const Vector v = integrate_rows(rows, all[j++]);
      vec_max = std::max(vec_max, v.norm());
      for (std::size_t i = 0; i < d; ++i) row_max[i] = std::max(row_max[i], std::abs(v(static_cast<Eigen::Index>(i))));
    }
    double row_sum = 0.0;
    double bound = c1 * static_cast<double>(d) * lambda;
    for (std::size_t i = 0; i < d; ++i) {
      row_sum += row_max[i];
      bound += out.rows[i].phi_gains[k] + out.rows[i].slack[k];
    }
    const double tol = kRoundoff * (1.0 + vec_max + bound);
    out.triangle_worst = std::max(out.triangle_worst, vec_max - row_sum);
    if (vec_max > row_sum + tol) out.triangle_ok = false;
    out.margins[k] = bound - vec_max;
    if (out.margins[k] < -tol) out.overall_ok = false;
  }
  out.pass = out.pass && out.triangle_ok && out.overall_ok;
  return out;
}

SuperhedgeReport empirical_superhedge_check(std::span<const AdaptedProcess> payoffs,
                                            std::span<const SampledPath> paths,
                                            std::span<const StrategyRule* const> strategies, double lambda) {
  if (payoffs.size() != paths.size()) throw ValidationError("one payoff process per path is required");
  if (strategies.empty()) throw ValidationError("need at least one strategy");
  if (!(lambda >= 0.0)) throw DomainError("capital must be non-negative");
  SuperhedgeReport out;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    if (payoffs[p].dim() != 1) throw ValidationError("payoff must be scalar");
    bool last_ok = false;
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      const auto real = realize(*strategies[s], paths[p]);
      SuperhedgeEntry e;
      e.path = p;
      e.strategy = s;
      e.admissible = check_admissible(real, lambda).admissible;
      e.min_margin = INFINITY;
      for (double t : paths[p].times()) {
        e.min_margin = std::min(e.min_margin, lambda + real.value_at(t) - payoffs[p].eval(t)(0));
      }
      last_ok = e.admissible && e.min_margin >= -kRoundoff * (1.0 + lambda);
      out.entries.push_back(e);
    }
    out.path_pass.push_back(last_ok);
    out.pass = out.pass && last_ok;
  }
  return out;
}

}  // namespace pathwise

namespace pathwise {

std::string fuzz_kind(std::size_t index) {
  static const char* names[] = {"gaussian_walk", "sign_walk", "growing_zigzag", "zigzag_breakout", "offset_walk",
                                "multiplicative"};
  return names[index % 6];
}

std::vector<double> fuzz_sequence(std::uint64_t seed, std::size_t index, std::size_t max_length) {
  if (max_length == 0) throw DomainError("fuzz sequences need a positive maximum length");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 gen(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = 1 + static_cast<std::size_t>(gen() % max_length);
  std::vector<double> x(n, 0.0);
  switch (index % 6) {
    case 0:
      for (std::size_t k = 1; k < n; ++k) x[k] = x[k - 1] + normal(gen);
      break;
    case 1:
      for (std::size_t k = 1; k < n; ++k) x[k] = x[k - 1] + ((gen() >> 63) ? 1.0 : -1.0);
      break;
    case 2: {
      const double a = 0.1 + 1.9 * unit(gen);
      for (std::size_t k = 0; k < n; ++k) x[k] = ((k % 2) ? -1.0 : 1.0) * static_cast<double>(k + 1) * a;
      break;
    }
    case 3: {
      const double a = 0.1 + unit(gen);
      const double b = 0.1 + 3.0 * unit(gen);
      const std::size_t turn = n / 2;
      for (std::size_t k = 0; k < n; ++k) {
        x[k] = k < turn ? ((k % 2) ? -a : a) : x[k - 1] + b;
      }
      break;
    }
    case 4:
      x[0] = 5.0 * normal(gen);
      for (std::size_t k = 1; k < n; ++k) x[k] = x[k - 1] + 0.01 * normal(gen);
      break;
    default:
      x[0] = 1.0;
      for (std::size_t k = 1; k < n; ++k) x[k] = x[k - 1] * (1.0 + 0.5 * normal(gen));
      break;
  }
  return x;
}

BDGSweep bdg_sweep(std::uint64_t seed, std::size_t count, std::size_t max_length, double c1) {
  BDGSweep out;
  out.worst_upper_margin = out.worst_lower_margin = out.worst_bs_lower_margin = INFINITY;
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = fuzz_sequence(seed, i, max_length);
    const auto r = verify_pathwise_bdg(x, c1);
    ++out.sequences;
    out.upper_violations += !r.upper_ok;
    out.lower_violations += !r.lower_ok;
    out.bs_lower_violations += !r.bs_lower_ok;
    out.prefix_upper_violations += r.upper_violations;
    out.max_abs_f = std::max(out.max_abs_f, r.max_abs_f);
    out.worst_upper_margin = std::min(out.worst_upper_margin, r.upper_margin);
    out.worst_lower_margin = std::min(out.worst_lower_margin, r.lower_margin);
    out.worst_bs_lower_margin = std::min(out.worst_bs_lower_margin, r.bs_lower_margin);
  }
  return out;
}

std::unique_ptr<StrategyRule> sweep_strategy(std::size_t index, int level, std::string* name) {
  const std::size_t round = index / 4;
  std::string label;
  std::unique_ptr<StrategyRule> rule;
  switch (index % 4) {
    case 0: {
      const double g = (round % 2) ? -1.0 : 1.0;
      label = "buy_and_hold";
      rule = std::make_unique<BuyAndHoldRule>(Vector::Constant(1, g));
      break;
    }
    case 1: {
      const int coarse = std::max(level - 3 - static_cast<int>(round % 4), 0);
      label = "lebesgue_tanh_level_" + std::to_string(coarse);
      rule = std::make_unique<LebesgueRule>(coarse, [](const SampledPath& p, double t) {
        return Vector::Constant(1, std::tanh((p.eval(t, 0) + 0.01) / 0.05));
      });
      break;
    }
    case 2: {
      const int coarse = std::max(level - 2, 0);
      label = "lebesgue_cos_level_" + std::to_string(coarse);
      rule = std::make_unique<LebesgueRule>(coarse, [](const SampledPath& p, double t) {
        return Vector::Constant(1, std::cos(40.0 * p.eval(t, 0)) + 0.5 * std::sin(3.0 * t));
      });
      break;
    }
    default:
      label = "grid_every_64";
      rule = std::make_unique<GridRule>(64, [](const SampledPath& p, double t) {
        return Vector::Constant(1, 0.5 + 0.5 * std::sin(8.0 * std::numbers::pi * t) + 0.5 * std::tanh(p.eval(t, 0) / 0.02));
      });
      break;
  }
  if (name) *name = label;
  return rule;
}

DominationSweep domination_sweep(const DominationSweepConfig& config) {
  DominationSweep out;
  for (std::size_t p = 0; p < config.paths; ++p) {
    RandomWalkSpec spec;
    spec.seed = config.seed + p;
    spec.steps = config.steps;
    spec.vol = config.vol;
    const auto path = generate_random_walk(spec);
    DominationSweepEntry e;
    e.seed = spec.seed;
    const auto rule = sweep_strategy(p, config.level, &e.strategy);
    const auto g = realize(*rule, path);
    e.lambda = required_lambda(g, config.level);
    const auto r = verify_domination(g, config.level, e.lambda, config.c1);
    e.pass = r.pass;
    e.worst = r.worst;
    e.discretization_ok = r.discretization_ok;
    e.discretization_worst = r.discretization_worst;
    e.integral_gap = r.integral_gap;
    out.passed += e.pass;
    out.discretization_passed += e.discretization_ok;
    out.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace pathwise
