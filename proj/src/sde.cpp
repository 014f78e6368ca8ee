#include "pathwise/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <string>

#include "pathwise/csv.hpp"
#include "pathwise/error.hpp"
#include "pathwise/lebesgue.hpp"

namespace pathwise {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t index_of(std::span<const double> grid, double t) {
  auto it = std::lower_bound(grid.begin(), grid.end(), t);
  if (it == grid.end() || *it != t) throw InvariantError("time " + csv::format(t) + " missing from working grid");
  return static_cast<std::size_t>(it - grid.begin());
}

void check_shape(const Matrix& out, const EvalContext& ctx, std::size_t cols) {
  if (out.rows() != static_cast<Eigen::Index>(ctx.end - ctx.begin) || out.cols() != static_cast<Eigen::Index>(cols)) {
    throw ValidationError("coefficient output has the wrong shape");
  }
}

// Y_{k+1} = Y_k + K_k dA_k + F_k dS_k. Shared by the Picard map and the
// forward recursion so both produce the same bits.
void advance(const Matrix& Kv, const Matrix& Fv, Eigen::Index row, const GridData& g, std::size_t k, const Matrix& Y,
             Eigen::Index yk, Matrix& out, Eigen::Index ok) {
  const Eigen::Index d = Y.cols();
  for (Eigen::Index i = 0; i < d; ++i) {
    double y = Y(yk, i) + Kv(row, i) * g.dA[k];
    for (Eigen::Index j = 0; j < d; ++j) y += Fv(row, i * d + j) * g.dS(static_cast<Eigen::Index>(k), j);
    out(ok, i) = y;
  }
}

double history_sup(const Matrix& X, std::size_t begin) {
  double best = 0.0;
  for (std::size_t j = 0; j < begin; ++j) best = std::max(best, X.row(static_cast<Eigen::Index>(j)).norm());
  return best;
}

struct Prepared {
  int level = 0;
  QVMatrixPath qv;
  WindowThresholds thresholds;
  Schedule schedule;
  GridData grid;
};

MonotoneCurve trace_curve(const QVMatrixPath& qv) {
  return MonotoneCurve{std::vector<double>(qv.times().begin(), qv.times().end()), qv.traces()};
}

Prepared prepare(const SDEProblem& problem, const SampledPath& path) {
  validate_problem(problem, path);
  const int level = problem.level ? *problem.level : resolution_level(path);
  auto qv = qv_path(path, level);
  const auto th = window_thresholds(problem.lipschitz(), problem.dim, problem.c1);
  auto schedule = window_schedule(trace_curve(qv), problem.drift.variation_curve(), th.q, th.r, path.horizon());
  auto grid = grid_data(problem, path, working_grid(path, level, schedule.thetas));
  return Prepared{level, std::move(qv), th, std::move(schedule), std::move(grid)};
}

Matrix start_matrix(const SDEProblem& problem, const SampledPath& path, std::size_t n) {
  const Vector x0 = problem.x0(path.eval(0.0));
  if (x0.size() != static_cast<Eigen::Index>(problem.dim)) throw ValidationError("initial value has the wrong dimension");
  if (!x0.allFinite()) throw ValidationError("initial value must be finite");
  Matrix X = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(problem.dim));
  X.row(0) = x0.transpose();
  return X;
}

// Accounting shared by solve and solve_direct.
void account(const SDEProblem& problem, const Prepared& prep, const SampledPath& path, Solution& sol) {
  sol.level = prep.level;
  sol.thresholds = prep.thresholds;
  sol.schedule = prep.schedule;
  sol.qv_trace_T = prep.qv.trace_at(path.horizon());
  const double q = prep.thresholds.q;
  const double r = prep.thresholds.r;
  const double M = problem.drift.bound();
  const auto fl = [](double a, double b) { return std::isinf(b) ? 0.0 : std::floor(a / b); };
  sol.window_bound = static_cast<std::size_t>(fl(M, r) + fl(sol.qv_trace_T, q)) + 2;
  if (prep.schedule.thetas.size() > sol.window_bound) {
    throw InvariantError(std::to_string(prep.schedule.thetas.size()) + " closed windows exceed the bound " +
                         std::to_string(sol.window_bound));
  }
  for (std::size_t n = 0; n < prep.schedule.thetas.size(); ++n) {
    const double theta = prep.schedule.thetas[n];
    const double k = std::isinf(r) ? 0.0 : std::ceil(problem.drift.variation(theta) / r);
    const double l = std::isinf(q) ? 0.0 : std::ceil(prep.qv.trace_at(theta) / q);
    if (k + l < static_cast<double>(n + 1)) sol.covering_ok = false;
  }
}

void residual_check(const SDEProblem& problem, const SampledPath& path, const GridData& g, Solution& sol) {
  const Matrix& X = sol.X.values();
  const std::size_t n = g.times.size();
  const std::size_t d = problem.dim;
  EvalContext ctx{g.times, X, 0, n - 1, path, 0.0};
  Matrix Kv(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(d));
  Matrix Fv(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(d * d));
  problem.K->evaluate(ctx, Kv);
  problem.F->evaluate(ctx, Fv);
  Vector integral = Vector::Zero(static_cast<Eigen::Index>(d));
  double worst = 0.0;
  double scale = X.row(0).norm();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    Matrix Fm(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        Fm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = Fv(ki, static_cast<Eigen::Index>(i * d + j));
    integral += Kv.row(ki).transpose() * g.dA[k] + Fm * g.dS.row(ki).transpose();
    const Vector res = X.row(ki + 1).transpose() - X.row(0).transpose() - integral;
    worst = std::max(worst, res.norm());
    scale = std::max(scale, X.row(ki + 1).norm());
  }
  sol.residual = worst;
  sol.residual_ok = worst <= 1e-9 * (1.0 + scale);
}

}  // namespace

WindowThresholds window_thresholds(double L, std::size_t d, double c1) {
  if (!(L >= 0.0) || !std::isfinite(L)) throw DomainError("Lipschitz constant must be finite and non-negative");
  if (d == 0) throw DomainError("dimension must be at least 1");
  if (!(c1 > 0.0)) throw DomainError("c1 must be positive");
  if (L == 0.0) return {kInf, kInf};
  const double dd = static_cast<double>(d);
  return {1.0 / (4.0 * c1 * c1 * L * L * dd * dd * dd * dd), 1.0 / (3.0 * L)};
}

double MonotoneCurve::eval(double t) const {
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto k = static_cast<std::size_t>(it - times.begin()) - 1;
  if (t == times[k]) return values[k];
  const double w = (t - times[k]) / (times[k + 1] - times[k]);
  return values[k] + w * (values[k + 1] - values[k]);
}

std::optional<double> MonotoneCurve::first_reach(double from, double target) const {
  if (std::isinf(target)) return std::nullopt;
  if (eval(from) >= target) return from;
  auto it = std::lower_bound(values.begin(), values.end(), target);
  if (it == values.end()) return std::nullopt;
  const auto j = static_cast<std::size_t>(it - values.begin());
  if (j == 0) return std::max(from, times[0]);
  const double w = (target - values[j - 1]) / (values[j] - values[j - 1]);
  const double t = std::clamp(times[j - 1] + w * (times[j] - times[j - 1]), times[j - 1], times[j]);
  return std::max(t, from);
}

DriftProcess::DriftProcess(std::vector<double> times, std::vector<double> up, std::vector<double> down, double bound)
    : times_(std::move(times)), up_(std::move(up)), down_(std::move(down)), bound_(bound) {
  if (times_.size() < 2 || up_.size() != times_.size() || down_.size() != times_.size()) {
    throw ValidationError("drift needs at least two knots and matching value arrays");
  }
  if (times_.front() != 0.0) throw ValidationError("drift knots must start at 0");
  if (up_.front() != 0.0 || down_.front() != 0.0) throw ValidationError("drift parts must start at 0");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1]) || !std::isfinite(times_[k])) throw ValidationError("drift knots must increase");
    if (!(up_[k] >= up_[k - 1]) || !(down_[k] >= down_[k - 1]) || !std::isfinite(up_[k]) || !std::isfinite(down_[k])) {
      throw ValidationError("drift parts must be finite and non-decreasing");
    }
  }
  if (!(bound_ >= 0.0) || !std::isfinite(bound_)) throw ValidationError("drift bound M must be finite and non-negative");
  if (up_.back() + down_.back() > bound_) {
    throw ValidationError("drift variation " + csv::format(up_.back() + down_.back()) + " exceeds the bound M = " +
                          csv::format(bound_));
  }
}

DriftProcess DriftProcess::linear(double up, double down, double horizon, double bound) {
  if (!(up >= 0.0) || !(down >= 0.0)) throw ValidationError("drift rates must be non-negative");
  if (!(horizon > 0.0)) throw ValidationError("drift horizon must be positive");
  return DriftProcess({0.0, horizon}, {0.0, up * horizon}, {0.0, down * horizon}, bound);
}

double DriftProcess::interp(const std::vector<double>& v, double t) const {
  if (!(t >= 0.0 && t <= horizon())) throw DomainError("time " + csv::format(t) + " outside the drift horizon");
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const auto k = std::min(static_cast<std::size_t>(it - times_.begin()) - 1, times_.size() - 2);
  if (t == times_[k]) return v[k];
  if (t == times_[k + 1]) return v[k + 1];
  const double w = (t - times_[k]) / (times_[k + 1] - times_[k]);
  return v[k] + w * (v[k + 1] - v[k]);
}

double DriftProcess::up(double t) const { return interp(up_, t); }
double DriftProcess::down(double t) const { return interp(down_, t); }

MonotoneCurve DriftProcess::variation_curve() const {
  MonotoneCurve c{times_, std::vector<double>(times_.size())};
  for (std::size_t k = 0; k < times_.size(); ++k) c.values[k] = up_[k] + down_[k];
  return c;
}

std::shared_ptr<ConstantCoefficient> ConstantCoefficient::scalar(double c, CoefficientRole role, std::size_t d) {
  if (role == CoefficientRole::drift) return std::make_shared<ConstantCoefficient>(Vector::Constant(static_cast<Eigen::Index>(d), c));
  Vector v = Vector::Zero(static_cast<Eigen::Index>(d * d));
  for (std::size_t i = 0; i < d; ++i) v(static_cast<Eigen::Index>(i * d + i)) = c;
  return std::make_shared<ConstantCoefficient>(std::move(v));
}

void ConstantCoefficient::evaluate(const EvalContext& ctx, Matrix& out) const {
  check_shape(out, ctx, static_cast<std::size_t>(value_.size()));
  out.rowwise() = value_.transpose();
}

double LinearCoefficient::lipschitz(std::size_t) const { return std::abs(scale_); }

void LinearCoefficient::evaluate(const EvalContext& ctx, Matrix& out) const {
  const auto d = ctx.X.cols();
  if (role_ == CoefficientRole::drift) {
    check_shape(out, ctx, static_cast<std::size_t>(d));
    for (std::size_t k = ctx.begin; k < ctx.end; ++k) {
      out.row(static_cast<Eigen::Index>(k - ctx.begin)) = scale_ * ctx.X.row(static_cast<Eigen::Index>(k));
    }
    return;
  }
  check_shape(out, ctx, static_cast<std::size_t>(d * d));
  out.setZero();
  for (std::size_t k = ctx.begin; k < ctx.end; ++k) {
    for (Eigen::Index i = 0; i < d; ++i) {
      out(static_cast<Eigen::Index>(k - ctx.begin), i * d + i) = scale_ * ctx.X(static_cast<Eigen::Index>(k), i);
    }
  }
}

double RunningMaxCoefficient::lipschitz(std::size_t d) const {
  return std::abs(scale_) * std::sqrt(static_cast<double>(d));
}

void RunningMaxCoefficient::evaluate(const EvalContext& ctx, Matrix& out) const {
  check_shape(out, ctx, static_cast<std::size_t>(ctx.X.cols()));
  double running = ctx.history_sup;
  for (std::size_t k = ctx.begin; k < ctx.end; ++k) {
    running = std::max(running, ctx.X.row(static_cast<Eigen::Index>(k)).norm());
    out.row(static_cast<Eigen::Index>(k - ctx.begin)).setConstant(scale_ * running);
  }
}

void FunctionCoefficient::evaluate(const EvalContext& ctx, Matrix& out) const {
  check_shape(out, ctx, out_dim_);
  for (std::size_t k = ctx.begin; k < ctx.end; ++k) {
    const Vector v = fn_(k, ctx);
    if (v.size() != static_cast<Eigen::Index>(out_dim_)) throw ValidationError("function coefficient returned the wrong size");
    out.row(static_cast<Eigen::Index>(k - ctx.begin)) = v.transpose();
  }
}

double SDEProblem::lipschitz() const {
  if (L) return *L;
  return K->lipschitz(dim) + F->lipschitz(dim);
}

std::function<Vector(const Vector&)> constant_start(Vector x0) {
  return [x0 = std::move(x0)](const Vector&) { return x0; };
}

void validate_problem(const SDEProblem& problem, const SampledPath& path) {
  if (problem.dim == 0) throw ValidationError("dimension must be at least 1");
  if (path.dim() != problem.dim) {
    throw ValidationError("path dimension " + std::to_string(path.dim()) + " differs from problem dimension " +
                          std::to_string(problem.dim));
  }
  if (!problem.K || !problem.F) throw ValidationError("both coefficients are required");
  if (!problem.x0) throw ValidationError("initial value is required");
  if (problem.K->out_dim(problem.dim) != problem.dim) throw ValidationError("drift coefficient must be R^d valued");
  if (problem.F->out_dim(problem.dim) != problem.dim * problem.dim) {
    throw ValidationError("diffusion coefficient must be R^{d x d} valued");
  }
  if (problem.drift.horizon() < path.horizon()) throw ValidationError("drift does not cover the path horizon");
  const double L = problem.lipschitz();
  if (!(L >= 0.0) || !std::isfinite(L)) throw ValidationError("Lipschitz constant must be finite and non-negative");
  if (!(problem.tol > 0.0)) throw ValidationError("Picard tolerance must be positive");
  if (problem.level && (*problem.level < 0 || *problem.level > 60)) throw ValidationError("level must lie in [0, 60]");
}

Schedule window_schedule(const MonotoneCurve& qv_trace, const MonotoneCurve& drift_variation, double q, double r,
                         double horizon) {
  if (!(q > 0.0) || !(r > 0.0)) throw DomainError("window budgets must be positive");
  Schedule out;
  double theta = 0.0;
  double base_qv = 0.0;  // |[S]| and A^u + A^v start from 0 for the first window
  double base_a = 0.0;
  for (;;) {
    const auto s = qv_trace.first_reach(theta, base_qv + q);
    const auto v = drift_variation.first_reach(theta, base_a + r);
    const double next = std::min(s.value_or(kInf), v.value_or(kInf));
    if (!(next <= horizon)) break;
    if (!out.thetas.empty() && !(next > theta)) throw InvariantError("window schedule stopped advancing");
    out.thetas.push_back(next);
    out.by_qv.push_back(s && *s == next ? 1 : 0);
    if (next == horizon) break;
    theta = next;
    base_qv = qv_trace.eval(theta);
    base_a = drift_variation.eval(theta);
  }
  return out;
}

std::vector<double> working_grid(const SampledPath& path, int level, std::span<const double> thetas) {
  std::vector<double> out(path.times().begin(), path.times().end());
  const auto p = merged_partition(path, level);
  out.insert(out.end(), p.times.begin(), p.times.end());
  out.insert(out.end(), thetas.begin(), thetas.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

GridData grid_data(const SDEProblem& problem, const SampledPath& path, std::vector<double> times) {
  GridData g;
  g.times = std::move(times);
  const std::size_t n = g.times.size();
  const auto d = static_cast<Eigen::Index>(path.dim());
  g.S.resize(static_cast<Eigen::Index>(n), d);
  for (std::size_t k = 0; k < n; ++k) g.S.row(static_cast<Eigen::Index>(k)) = path.eval(g.times[k]).transpose();
  g.dA.resize(n - 1);
  g.dS.resize(static_cast<Eigen::Index>(n - 1), d);
  double prev = problem.drift.value(g.times[0]);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double next = problem.drift.value(g.times[k + 1]);
    g.dA[k] = next - prev;
    prev = next;
    const auto ki = static_cast<Eigen::Index>(k);
    g.dS.row(ki) = g.S.row(ki + 1) - g.S.row(ki);
  }
  return g;
}

Matrix picard_apply(const SDEProblem& problem, const SampledPath& path, const GridData& grid, const Matrix& G,
                    std::size_t begin, std::size_t end, double hist_sup) {
  if (G.cols() != static_cast<Eigen::Index>(problem.dim) || G.rows() != static_cast<Eigen::Index>(grid.times.size())) {
    throw ValidationError("candidate process does not match the working grid");
  }
  if (!(begin <= end && end < grid.times.size())) throw ValidationError("window indices outside the working grid");
  const std::size_t d = problem.dim;
  const std::size_t steps = end - begin;
  Matrix W(static_cast<Eigen::Index>(steps + 1), static_cast<Eigen::Index>(d));
  W.row(0) = G.row(static_cast<Eigen::Index>(begin));
  if (steps == 0) return W;
  EvalContext ctx{grid.times, G, begin, end, path, hist_sup};
  Matrix Kv(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(d));
  Matrix Fv(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(d * d));
  problem.K->evaluate(ctx, Kv);
  problem.F->evaluate(ctx, Fv);
  for (std::size_t k = begin; k < end; ++k) {
    const auto row = static_cast<Eigen::Index>(k - begin);
    advance(Kv, Fv, row, grid, k, W, row, W, row + 1);
  }
  return W;
}

WindowResult solve_window(const SDEProblem& problem, const SampledPath& path, const GridData& grid, Matrix& X,
                          std::size_t begin, std::size_t end, InitialGuess guess) {
  WindowResult res;
  res.begin = begin;
  res.end = end;
  res.start = grid.times[begin];
  res.stop = grid.times[end];
  res.grid_points = end - begin + 1;
  const auto b = static_cast<Eigen::Index>(begin);
  const auto P = static_cast<Eigen::Index>(res.grid_points);
  const auto d = X.cols();

  Eigen::RowVectorXd start = X.row(b);
  if (guess == InitialGuess::shifted) start.array() += 1.0;
  for (Eigen::Index k = 1; k < P; ++k) X.row(b + k) = start;

  const double hist = history_sup(X, begin);
  const std::size_t cap = problem.max_iter ? *problem.max_iter : res.grid_points + 1;
  for (std::size_t app = 1; app <= cap; ++app) {
    Matrix W = picard_apply(problem, path, grid, X, begin, end, hist);
    const std::size_t k = app - 1;  // X holds iterate k, W iterate k + 1
    const auto head = std::min<Eigen::Index>(static_cast<Eigen::Index>(k) + 1, P);
    if (!(W.topRows(head).array() == X.block(b, 0, head, d).array()).all()) res.stabilized = false;
    double dist = 0.0;
    for (Eigen::Index j = 0; j < P; ++j) dist = std::max(dist, (W.row(j) - X.row(b + j)).norm());
    X.block(b, 0, P, d) = W;
    res.applications = app;
    res.final_distance = dist;
    if (dist < problem.tol) {
      res.converged = true;
      res.iterations = std::max<std::size_t>(k, 1);
      return res;
    }
  }
  res.iterations = res.applications;
  return res;
}

Solution solve(const SDEProblem& problem, const SampledPath& path, InitialGuess guess) {
  const auto prep = prepare(problem, path);
  const auto& g = prep.grid;
  const std::size_t n = g.times.size();
  Matrix X = start_matrix(problem, path, n);

  std::vector<std::size_t> bounds{0};
  for (double theta : prep.schedule.thetas) bounds.push_back(index_of(g.times, theta));
  if (bounds.back() != n - 1) bounds.push_back(n - 1);

  Solution sol;
  for (std::size_t w = 0; w + 1 < bounds.size(); ++w) {
    const Matrix before = X.topRows(static_cast<Eigen::Index>(bounds[w] + 1));
    auto res = solve_window(problem, path, g, X, bounds[w], bounds[w + 1], guess);
    res.closed = w < prep.schedule.thetas.size();
    if (!(X.topRows(before.rows()).array() == before.array()).all()) sol.patching_ok = false;
    sol.converged = sol.converged && res.converged;
    sol.stabilized = sol.stabilized && res.stabilized && res.iterations <= res.grid_points;
    sol.windows.push_back(res);
  }
  sol.X = AdaptedProcess(g.times, std::move(X));
  account(problem, prep, path, sol);
  residual_check(problem, path, g, sol);
  return sol;
}

Solution solve_direct(const SDEProblem& problem, const SampledPath& path) {
  const auto prep = prepare(problem, path);
  const auto& g = prep.grid;
  const std::size_t n = g.times.size();
  const std::size_t d = problem.dim;
  Matrix X = start_matrix(problem, path, n);
  Matrix Kv(1, static_cast<Eigen::Index>(d));
  Matrix Fv(1, static_cast<Eigen::Index>(d * d));
  double hist = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    EvalContext ctx{g.times, X, k, k + 1, path, hist};
    problem.K->evaluate(ctx, Kv);
    problem.F->evaluate(ctx, Fv);
    advance(Kv, Fv, 0, g, k, X, static_cast<Eigen::Index>(k), X, static_cast<Eigen::Index>(k + 1));
    hist = std::max(hist, X.row(static_cast<Eigen::Index>(k)).norm());
  }
  Solution sol;
  sol.X = AdaptedProcess(g.times, std::move(X));
  account(problem, prep, path, sol);
  residual_check(problem, path, g, sol);
  return sol;
}

double solution_distance(const Solution& a, const Solution& b) {
  const auto& x = a.X.values();
  const auto& y = b.X.values();
  if (x.rows() != y.rows() || x.cols() != y.cols() ||
      !std::equal(a.X.times().begin(), a.X.times().end(), b.X.times().begin())) {
    throw ValidationError("solutions live on different grids");
  }
  return (x - y).cwiseAbs().maxCoeff();
}

AdaptedProcess black_scholes_exact(double x0, double sigma, const DriftProcess& drift, const SampledPath& path,
                                   const QVMatrixPath& qv, std::span<const double> times) {
  if (path.dim() != 1 || qv.dim() != 1) throw DomainError("the closed-form solution needs d = 1");
  const double s0 = path.value(0, 0);
  Matrix values(static_cast<Eigen::Index>(times.size()), 1);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    values(static_cast<Eigen::Index>(k), 0) =
        x0 * std::exp(drift.value(t) - 0.5 * sigma * sigma * qv.trace_at(t) + sigma * (path.eval(t, 0) - s0));
  }
  return AdaptedProcess(std::vector<double>(times.begin(), times.end()), std::move(values));
}

AdaptedProcess black_scholes_exact(double x0, double sigma, const DriftProcess& drift, const SampledPath& path,
                                   const QVMatrixPath& qv) {
  return black_scholes_exact(x0, sigma, drift, path, qv, path.times());
}

LipschitzCheck check_lipschitz(const SDEProblem& problem, const SampledPath& path, std::size_t pairs,
                               std::uint64_t seed) {
  validate_problem(problem, path);
  const auto times = path.times();
  const std::size_t n = times.size();
  const auto d = static_cast<Eigen::Index>(problem.dim);
  const double L = problem.lipschitz();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LipschitzCheck out;
  Matrix KX(static_cast<Eigen::Index>(n), d), KY(static_cast<Eigen::Index>(n), d);
  Matrix FX(static_cast<Eigen::Index>(n), d * d), FY(static_cast<Eigen::Index>(n), d * d);
  for (std::size_t p = 0; p < pairs; ++p) {
    Matrix X(static_cast<Eigen::Index>(n), d), Y(static_cast<Eigen::Index>(n), d);
    const double spread = (p % 2 == 0) ? 1.0 : 1e-3;
    for (std::size_t k = 0; k < n; ++k) {
      for (Eigen::Index i = 0; i < d; ++i) {
        const auto ki = static_cast<Eigen::Index>(k);
        X(ki, i) = (k == 0 ? 0.0 : X(ki - 1, i)) + 0.1 * normal(gen);
        Y(ki, i) = X(ki, i) + spread * normal(gen);
      }
    }
    EvalContext cx{times, X, 0, n, path, 0.0};
    EvalContext cy{times, Y, 0, n, path, 0.0};
    problem.K->evaluate(cx, KX);
    problem.K->evaluate(cy, KY);
    problem.F->evaluate(cx, FX);
    problem.F->evaluate(cy, FY);
    double sup = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      sup = std::max(sup, (X.row(ki) - Y.row(ki)).norm());
      const double gap = (KX.row(ki) - KY.row(ki)).norm() + (FX.row(ki) - FY.row(ki)).norm();
      if (sup > 0.0) out.worst_ratio = std::max(out.worst_ratio, gap / sup);
    }
  }
  out.ok = out.worst_ratio <= L * (1.0 + 1e-9) + 1e-12;
  return out;
}

void write_solution_csv(std::ostream& out, const AdaptedProcess& X) {
  out << 't';
  for (std::size_t i = 1; i <= X.dim(); ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t k = 0; k < X.size(); ++k) {
    out << csv::format(X.times()[k]);
    for (Eigen::Index i = 0; i < X.values().cols(); ++i) out << ',' << csv::format(X.values()(static_cast<Eigen::Index>(k), i));
    out << '\n';
  }
}

}  // namespace pathwise
