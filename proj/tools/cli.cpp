#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathwise/bdg.hpp"
#include "pathwise/csv.hpp"
#include "pathwise/error.hpp"
#include "pathwise/lebesgue.hpp"
#include "pathwise/paths.hpp"
#include "pathwise/problem.hpp"
#include "pathwise/quadvar.hpp"
#include "pathwise/sde.hpp"
#include "pathwise/strategy.hpp"

namespace pathwise::cli {

namespace {

using json = nlohmann::ordered_json;

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io_error"; }
};

struct Config {
  std::string input;
  std::string output;
  std::string report;
  std::string problem;
  std::string oracle;
  std::optional<int> level;
  std::optional<double> tol;
  std::uint64_t seed = 1;
  std::size_t ensemble = 1;
  // gen / solve path generation
  std::size_t steps = 4096;
  double horizon = 1.0;
  std::size_t dim = 1;
  double vol = 1.0;
  // qv
  int n_max = 20;
  // bdg
  std::size_t length = 1000;
  std::size_t paths = 100;
  bool ignore_lower = false;
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::ifstream open_in(const std::string& name) {
  std::ifstream in(name);
  if (!in) throw IoError("cannot read `" + name + "`");
  return in;
}

std::ofstream open_out(const std::string& name) {
  std::ofstream out(name, std::ios::binary);
  if (!out) throw IoError("cannot write `" + name + "`");
  return out;
}

SampledPath read_path(const std::string& name) {
  auto in = open_in(name);
  return load_path(in);
}

// JSON has no infinity; budgets of an L = 0 problem are reported as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void emit_report(json report, const Config& cfg, std::ostream& out) {
  report["generated_at"] = timestamp();
  if (cfg.report.empty()) {
    out << report.dump(2) << '\n';
  } else {
    auto f = open_out(cfg.report);
    f << report.dump(2) << '\n';
  }
}

RandomWalkSpec walk_spec(const Config& cfg, std::uint64_t seed, std::size_t dim) {
  RandomWalkSpec spec;
  spec.seed = seed;
  spec.steps = cfg.steps;
  spec.horizon = cfg.horizon;
  spec.dim = dim;
  spec.vol = cfg.vol;
  return spec;
}

std::string indexed_name(const std::string& name, std::size_t k) {
  const std::filesystem::path p(name);
  auto stem = p.stem().string() + "_" + std::to_string(k) + p.extension().string();
  return (p.parent_path() / stem).string();
}

int cmd_gen(const Config& cfg, std::ostream& out) {
  if (cfg.ensemble == 0) throw ValidationError("--ensemble must be at least 1");
  if (cfg.ensemble > 1 && cfg.output.empty()) throw ValidationError("--output is required when --ensemble > 1");
  json files = json::array();
  for (std::size_t k = 0; k < cfg.ensemble; ++k) {
    const auto path = generate_random_walk(walk_spec(cfg, cfg.seed + k, cfg.dim));
    if (cfg.output.empty()) {
      save_path(out, path);
      return kPass;
    }
    const auto name = cfg.ensemble == 1 ? cfg.output : indexed_name(cfg.output, k);
    auto f = open_out(name);
    save_path(f, path);
    files.push_back({{"file", name}, {"seed", cfg.seed + k}, {"resolution_level", resolution_level(path)}});
  }
  json report{{"command", "gen"},     {"steps", cfg.steps}, {"horizon", cfg.horizon},
              {"dim", cfg.dim},       {"vol", cfg.vol},     {"files", files}};
  emit_report(std::move(report), cfg, out);
  return kPass;
}

int cmd_qv(const Config& cfg, std::ostream& out) {
  if (cfg.input.empty()) throw ValidationError("--input is required");
  const auto path = read_path(cfg.input);
  const double T = path.horizon();
  json levels = json::array();
  std::optional<QVMatrixPath> result;
  bool search = !cfg.level.has_value();
  if (search) {
    QVOptions opt;
    if (cfg.tol) opt.tol = *cfg.tol;
    opt.n_max = cfg.n_max;
    result = qv(path, opt);
    const auto& dist = result->level_distances();
    for (std::size_t n = 0; n <= dist.size(); ++n) {
      json row{{"level", n}, {"trace_T", qv_level(path, static_cast<int>(n), T).trace()}};
      row["distance_to_next"] = n < dist.size() ? json(dist[n]) : json(nullptr);
      levels.push_back(row);
    }
  } else {
    result = qv_path(path, *cfg.level);
    levels.push_back({{"level", *cfg.level}, {"trace_T", qv_level(path, *cfg.level, T).trace()},
                      {"distance_to_next", nullptr}});
  }
  if (!cfg.output.empty()) {
    auto f = open_out(cfg.output);
    write_qv_csv(f, *result);
  }
  json report{{"command", "qv"},
              {"input", cfg.input},
              {"dim", path.dim()},
              {"resolution_level", resolution_level(path)},
              {"level_used", result->level_used()},
              {"converged", result->converged()},
              {"searched", search},
              {"trace_T", result->trace_at(T)},
              {"levels", levels}};
  if (search) {
    report["tol"] = cfg.tol.value_or(QVOptions{}.tol);
    report["n_max"] = cfg.n_max;
  }
  emit_report(std::move(report), cfg, out);
  return result->converged() ? kPass : kFailed;
}

int cmd_bdg(const Config& cfg, std::ostream& out) {
  const auto sweep = bdg_sweep(cfg.seed, cfg.ensemble, cfg.length);
  json fuzz{{"sequences", sweep.sequences},
            {"max_length", cfg.length},
            {"upper_violations", sweep.upper_violations},
            {"prefix_upper_violations", sweep.prefix_upper_violations},
            {"lower_violations", sweep.lower_violations},
            {"bs_lower_violations", sweep.bs_lower_violations},
            {"max_abs_hedge", sweep.max_abs_f},
            {"worst_upper_margin", number_or_null(sweep.worst_upper_margin)},
            {"worst_lower_margin", number_or_null(sweep.worst_lower_margin)},
            {"worst_bs_lower_margin", number_or_null(sweep.worst_bs_lower_margin)}};

  DominationSweepConfig dc;
  dc.seed = cfg.seed;
  dc.paths = cfg.paths;
  if (cfg.level) dc.level = *cfg.level;
  const auto dom = domination_sweep(dc);
  json entries = json::array();
  for (const auto& e : dom.entries) {
    entries.push_back({{"seed", e.seed},
                       {"strategy", e.strategy},
                       {"lambda", e.lambda},
                       {"pass", e.pass},
                       {"worst_margin", e.worst},
                       {"discretization_ok", e.discretization_ok},
                       {"integral_gap", e.integral_gap}});
  }
  json domination{{"paths", dom.entries.size()},
                  {"level", dc.level},
                  {"steps", dc.steps},
                  {"passed", dom.passed},
                  {"discretization_passed", dom.discretization_passed},
                  {"entries", entries}};

  bool input_ok = true;
  json on_input = nullptr;
  if (!cfg.input.empty()) {
    const auto path = read_path(cfg.input);
    const int level = cfg.level.value_or(resolution_level(path));
    const auto d = static_cast<Eigen::Index>(path.dim());
    std::vector<StrategyRealization> rows;
    for (Eigen::Index i = 0; i < d; ++i) rows.push_back(realize(BuyAndHoldRule(Vector::Unit(d, i)), path));
    const auto qvp = qv_path(path, level);
    const double lambda = std::sqrt(std::max(0.0, qv_norm(rows, qvp, path.horizon())));
    const auto r = multidim_bdg_check(rows, level, lambda);
    input_ok = r.pass;
    on_input = {{"input", cfg.input},   {"level", level},           {"lambda", lambda},
                {"pass", r.pass},       {"triangle_ok", r.triangle_ok}, {"overall_ok", r.overall_ok}};
  }

  const bool upper = sweep.upper_violations == 0 && sweep.prefix_upper_violations == 0;
  const bool hedge = sweep.max_abs_f <= 2.0;
  const bool lower = sweep.lower_violations == 0;
  const bool bs_lower = sweep.bs_lower_violations == 0;
  const bool domination_ok = dom.passed == dom.entries.size();
  const bool pass = upper && hedge && (lower || cfg.ignore_lower) && bs_lower && domination_ok && input_ok;
  json report{{"command", "bdg"},
              {"seed", cfg.seed},
              {"fuzz", fuzz},
              {"domination", domination},
              {"input_check", on_input},
              {"checks",
               {{"upper", upper},
                {"hedge_bound", hedge},
                {"lower_as_stated", lower},
                {"lower_gated", !cfg.ignore_lower},
                {"bs_lower", bs_lower},
                {"domination", domination_ok},
                {"input", input_ok}}},
              {"pass", pass}};
  if (!cfg.output.empty()) {
    auto f = open_out(cfg.output);
    report["generated_at"] = timestamp();
    f << report.dump(2) << '\n';
  } else {
    emit_report(std::move(report), cfg, out);
  }
  return pass ? kPass : kFailed;
}

int cmd_solve(const Config& cfg, std::ostream& out) {
  if (cfg.problem.empty()) throw ValidationError("--problem is required");
  if (!cfg.oracle.empty() && cfg.oracle != "direct" && cfg.oracle != "bs") {
    throw ValidationError("--oracle must be direct or bs");
  }
  std::optional<SampledPath> path;
  if (!cfg.input.empty()) path = read_path(cfg.input);

  // The problem's dimension decides the generated path's dimension, and the
  // path's horizon decides the drift horizon; peek at dim first.
  std::size_t dim = cfg.dim;
  {
    auto in = open_in(cfg.problem);
    std::stringstream buf;
    buf << in.rdbuf();
    const auto doc = nlohmann::json::parse(buf.str(), nullptr, false);
    if (doc.is_object() && doc.contains("dim") && doc["dim"].is_number_unsigned()) dim = doc["dim"].get<std::size_t>();
  }
  if (!path) path = generate_random_walk(walk_spec(cfg, cfg.seed, dim));

  auto in = open_in(cfg.problem);
  auto spec = load_problem(in, path->horizon());
  auto& problem = spec.problem;
  if (cfg.level) problem.level = *cfg.level;
  if (cfg.tol) problem.tol = *cfg.tol;

  const auto sol = solve(problem, *path);
  const auto shifted = solve(problem, *path, InitialGuess::shifted);
  const double uniqueness = solution_distance(sol, shifted);
  const auto lip = check_lipschitz(problem, *path, 8, cfg.seed);

  std::optional<Solution> direct;
  std::optional<AdaptedProcess> bs;
  double direct_diff = 0.0;
  double bs_rel = 0.0;
  if (cfg.oracle == "direct") {
    direct = solve_direct(problem, *path);
    direct_diff = solution_distance(sol, *direct);
  } else if (cfg.oracle == "bs") {
    if (!black_scholes_applies(spec)) {
      throw ValidationError("the bs oracle needs dim 1, K linear with scale 1, F linear and a constant x0");
    }
    const auto qvp = qv_path(*path, sol.level);
    bs = black_scholes_exact(spec.x0_scalar, spec.f_scale, problem.drift, *path, qvp, sol.X.times());
    for (std::size_t k = 0; k < bs->size(); ++k) {
      const double exact = bs->values()(static_cast<Eigen::Index>(k), 0);
      const double got = sol.X.values()(static_cast<Eigen::Index>(k), 0);
      const double rel = exact != 0.0 ? std::abs(got - exact) / std::abs(exact) : std::abs(got);
      bs_rel = std::max(bs_rel, rel);
    }
  }

  if (!cfg.output.empty()) {
    auto f = open_out(cfg.output);
    const auto d = sol.X.dim();
    f << 't';
    for (std::size_t i = 1; i <= d; ++i) f << ",x" << i;
    if (direct)
      for (std::size_t i = 1; i <= d; ++i) f << ",direct_x" << i;
    if (bs) f << ",bs_x1";
    f << '\n';
    for (std::size_t k = 0; k < sol.X.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      f << csv::format(sol.X.times()[k]);
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(d); ++i) f << ',' << csv::format(sol.X.values()(kk, i));
      if (direct)
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(d); ++i) f << ',' << csv::format(direct->X.values()(kk, i));
      if (bs) f << ',' << csv::format(bs->values()(kk, 0));
      f << '\n';
    }
  }

  std::size_t max_iterations = 0;
  json windows = json::array();
  for (const auto& w : sol.windows) {
    max_iterations = std::max(max_iterations, w.iterations);
    windows.push_back({{"start", w.start},
                       {"stop", w.stop},
                       {"closed", w.closed},
                       {"grid_points", w.grid_points},
                       {"iterations", w.iterations},
                       {"converged", w.converged},
                       {"stabilized", w.stabilized}});
  }
  const bool direct_ok = !direct || direct_diff <= 1e-10;
  const bool pass = sol.converged && sol.stabilized && sol.patching_ok && sol.covering_ok && sol.residual_ok &&
                    uniqueness < 1e-10 && lip.ok && direct_ok;
  json report{{"command", "solve"},
              {"problem", cfg.problem},
              {"input", cfg.input.empty() ? json(nullptr) : json(cfg.input)},
              {"seed", cfg.input.empty() ? json(cfg.seed) : json(nullptr)},
              {"grid_points", sol.X.size()},
              {"level", sol.level},
              {"lipschitz", problem.lipschitz()},
              {"q", number_or_null(sol.thresholds.q)},
              {"r", number_or_null(sol.thresholds.r)},
              {"qv_trace_T", sol.qv_trace_T},
              {"closed_windows", sol.schedule.thetas.size()},
              {"window_bound", sol.window_bound},
              {"covering_ok", sol.covering_ok},
              {"converged", sol.converged},
              {"stabilized", sol.stabilized},
              {"patching_ok", sol.patching_ok},
              {"max_iterations", max_iterations},
              {"residual", sol.residual},
              {"residual_ok", sol.residual_ok},
              {"uniqueness_distance", uniqueness},
              {"lipschitz_worst_ratio", lip.worst_ratio},
              {"lipschitz_ok", lip.ok},
              {"oracle", cfg.oracle.empty() ? json(nullptr) : json(cfg.oracle)},
              {"windows", windows},
              {"pass", pass}};
  if (direct) report["direct_max_abs_diff"] = direct_diff;
  if (bs) report["bs_sup_rel_error"] = bs_rel;
  emit_report(std::move(report), cfg, out);
  return pass ? kPass : kFailed;
}

void write_error(std::ostream& err, const std::string& kind, const std::string& message) {
  json e{{"error", {{"kind", kind}, {"message", message}}}};
  err << e.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pathwise quadratic variation, BDG hedges and SDE solving on sampled paths", "pathwise"};
  app.require_subcommand(1);
  Config cfg;

  auto common = [&cfg](CLI::App* sub) {
    sub->add_option("--input", cfg.input, "Path CSV (t,x1,...,xd)");
    sub->add_option("--output", cfg.output, "Output file");
    sub->add_option("--level", cfg.level, "Lebesgue partition level")->check(CLI::Range(0, 60));
    sub->add_option("--tol", cfg.tol, "Tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "Random seed");
    sub->add_option("--ensemble", cfg.ensemble, "Ensemble size");
    sub->add_option("--report", cfg.report, "JSON report file (default: stdout)");
  };
  auto walk = [&cfg](CLI::App* sub) {
    sub->add_option("--steps", cfg.steps, "Random-walk steps")->check(CLI::PositiveNumber);
    sub->add_option("--horizon", cfg.horizon, "Horizon T")->check(CLI::PositiveNumber);
    sub->add_option("--vol", cfg.vol, "Volatility")->check(CLI::NonNegativeNumber);
  };

  auto* gen = app.add_subcommand("gen", "Generate seeded random-walk paths");
  common(gen);
  walk(gen);
  gen->add_option("--dim", cfg.dim, "Dimension")->check(CLI::PositiveNumber);

  auto* qvc = app.add_subcommand("qv", "Quadratic covariation along Lebesgue partitions");
  common(qvc);
  qvc->add_option("--n-max", cfg.n_max, "Level cap for the convergence search")->check(CLI::Range(0, 60));

  auto* bdg = app.add_subcommand("bdg", "Pathwise BDG fuzzing and domination checks");
  common(bdg);
  cfg.ensemble = 10000;
  bdg->add_option("--length", cfg.length, "Maximum fuzz sequence length")->check(CLI::PositiveNumber);
  bdg->add_option("--paths", cfg.paths, "Random-walk paths for the domination check");
  bdg->add_flag("--ignore-lower", cfg.ignore_lower, "Report but do not gate on the lower estimate as stated");

  auto* sol = app.add_subcommand("solve", "Solve an integral equation driven by a path");
  common(sol);
  walk(sol);
  sol->add_option("--problem", cfg.problem, "Problem JSON");
  sol->add_option("--oracle", cfg.oracle, "Cross-check: direct or bs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    write_error(err, "usage_error", e.what());
    return kUsage;
  }
  if (!bdg->parsed() && cfg.ensemble == 10000) cfg.ensemble = 1;
  if (bdg->parsed() && bdg->count("--ensemble") == 0) cfg.ensemble = 10000;

  try {
    if (gen->parsed()) return cmd_gen(cfg, out);
    if (qvc->parsed()) return cmd_qv(cfg, out);
    if (bdg->parsed()) return cmd_bdg(cfg, out);
    return cmd_solve(cfg, out);
  } catch (const Error& e) {
    write_error(err, e.kind(), e.what());
  } catch (const nlohmann::json::exception& e) {
    write_error(err, "parse_error", e.what());
  } catch (const std::exception& e) {
    write_error(err, "error", e.what());
  }
  return kUsage;
}

}  // namespace pathwise::cli
