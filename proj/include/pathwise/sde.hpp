#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <cstdint>
#include <string>
#include <vector>

#include "pathwise/bdg.hpp"
#include "pathwise/paths.hpp"
#include "pathwise/quadvar.hpp"

namespace pathwise {

struct WindowThresholds {
  double q = 0.0;  // budget of |[S]| per window
  double r = 0.0;  // budget of A^u + A^v per window
};

/// q = 1 / (4 c1^2 L^2 d^4), r = 1 / (3 L). L = 0 gives infinite budgets.
WindowThresholds window_thresholds(double L, std::size_t d, double c1 = kDefaultC1);

/// Non-decreasing piecewise-linear curve through (times[k], values[k]).
struct MonotoneCurve {
  std::vector<double> times;
  std::vector<double> values;

  double eval(double t) const;
  /// Earliest t >= from with eval(t) >= target, if any.
  std::optional<double> first_reach(double from, double target) const;
};

/// A = A^u - A^v with A^u, A^v continuous, non-decreasing, starting at 0,
/// sampled at knots and interpolated linearly; A^u_T + A^v_T <= M.
class DriftProcess {
 public:
  DriftProcess(std::vector<double> times, std::vector<double> up, std::vector<double> down, double bound);

  /// A^u_t = up * t, A^v_t = down * t on [0, T].
  static DriftProcess linear(double up, double down, double horizon, double bound);

  double horizon() const noexcept { return times_.back(); }
  double bound() const noexcept { return bound_; }
  double up(double t) const;
  double down(double t) const;
  double value(double t) const { return up(t) - down(t); }
  double variation(double t) const { return up(t) + down(t); }
  MonotoneCurve variation_curve() const;

 private:
  double interp(const std::vector<double>& v, double t) const;

  std::vector<double> times_;
  std::vector<double> up_;
  std::vector<double> down_;
  double bound_;
};

/// What a coefficient sees when asked for its values at grid indices
/// begin..end-1. Row k of X is the candidate solution at times[k]; only rows
/// 0..k may be read for the output at k. `history_sup` is max_{j<begin} |X_j|.
struct EvalContext {
  std::span<const double> times;
  const Matrix& X;
  std::size_t begin;
  std::size_t end;
  const SampledPath& path;
  double history_sup;
};

/// K(t, X, omega) in R^d or F(t, X, omega) in R^{d x d} (row-major d*d).
class Coefficient {
 public:
  virtual ~Coefficient() = default;
  virtual std::string name() const = 0;
  virtual std::size_t out_dim(std::size_t d) const = 0;
  /// Declared Lipschitz constant in the running-sup metric.
  virtual double lipschitz(std::size_t d) const = 0;
  /// Fills out.row(k - begin) for k in [begin, end).
  virtual void evaluate(const EvalContext& ctx, Matrix& out) const = 0;
};

enum class CoefficientRole { drift, diffusion };

/// Fixed value; a scalar is broadcast (drift) or put on the diagonal
/// (diffusion).
class ConstantCoefficient : public Coefficient {
 public:
  explicit ConstantCoefficient(Vector value) : value_(std::move(value)) {}
  static std::shared_ptr<ConstantCoefficient> scalar(double c, CoefficientRole role, std::size_t d);
  std::string name() const override { return "constant"; }
  std::size_t out_dim(std::size_t) const override { return static_cast<std::size_t>(value_.size()); }
  double lipschitz(std::size_t) const override { return 0.0; }
  void evaluate(const EvalContext& ctx, Matrix& out) const override;

 private:
  Vector value_;
};

/// scale * X_t (drift) or scale * diag(X_t) (diffusion).
class LinearCoefficient : public Coefficient {
 public:
  LinearCoefficient(double scale, CoefficientRole role) : scale_(scale), role_(role) {}
  std::string name() const override { return "linear"; }
  double scale() const noexcept { return scale_; }
  std::size_t out_dim(std::size_t d) const override { return role_ == CoefficientRole::drift ? d : d * d; }
  double lipschitz(std::size_t) const override;
  void evaluate(const EvalContext& ctx, Matrix& out) const override;

 private:
  double scale_;
  CoefficientRole role_;
};

/// Every drift component equals scale * sup_{s<=t} |X_s|.
class RunningMaxCoefficient : public Coefficient {
 public:
  explicit RunningMaxCoefficient(double scale) : scale_(scale) {}
  std::string name() const override { return "running_max"; }
  std::size_t out_dim(std::size_t d) const override { return d; }
  double lipschitz(std::size_t d) const override;
  void evaluate(const EvalContext& ctx, Matrix& out) const override;

 private:
  double scale_;
};

/// Row-at-a-time callable, for tests and experiments.
class FunctionCoefficient : public Coefficient {
 public:
  using Fn = std::function<Vector(std::size_t k, const EvalContext&)>;
  FunctionCoefficient(Fn fn, std::size_t out_dim, double lipschitz)
      : fn_(std::move(fn)), out_dim_(out_dim), lipschitz_(lipschitz) {}
  std::string name() const override { return "function"; }
  std::size_t out_dim(std::size_t) const override { return out_dim_; }
  double lipschitz(std::size_t) const override { return lipschitz_; }
  void evaluate(const EvalContext& ctx, Matrix& out) const override;

 private:
  Fn fn_;
  std::size_t out_dim_;
  double lipschitz_;
};

struct SDEProblem {
  std::size_t dim = 1;
  /// X_0 as a function of omega(0); see constant_start.
  std::function<Vector(const Vector&)> x0;
  std::shared_ptr<const Coefficient> K;
  std::shared_ptr<const Coefficient> F;
  DriftProcess drift = DriftProcess::linear(0.0, 0.0, 1.0, 0.0);
  /// Lipschitz constant; unset means K's plus F's declared constants.
  std::optional<double> L;
  double c1 = kDefaultC1;
  /// Partition level; unset means resolution_level(path).
  std::optional<int> level;
  double tol = 1e-12;
  /// Picard cap per window; unset means window size + 1.
  std::optional<std::size_t> max_iter;

  double lipschitz() const;
};

std::function<Vector(const Vector&)> constant_start(Vector x0);

/// Throws ValidationError when components disagree on the dimension or the
/// drift does not cover the path horizon.
void validate_problem(const SDEProblem& problem, const SampledPath& path);

struct Schedule {
  std::vector<double> thetas;  // closed window ends, each < T
  std::vector<char> by_qv;     // 1 where |[S]| triggered, 0 where the drift did
};

/// theta_n = sigma_n ^ vartheta_n, built inductively from theta_{n-1}; stops at
/// the first window that does not close before T.
Schedule window_schedule(const MonotoneCurve& qv_trace, const MonotoneCurve& drift_variation, double q, double r,
                         double horizon);

/// Path grid joined with the merged partition and the closed window ends.
std::vector<double> working_grid(const SampledPath& path, int level, std::span<const double> thetas);

/// Discretized coefficients of the equation on a fixed grid.
struct GridData {
  std::vector<double> times;
  Matrix S;                // path at the grid times
  std::vector<double> dA;  // A_{t_{k+1}} - A_{t_k}
  Matrix dS;               // rows S_{t_{k+1}} - S_{t_k}
};

GridData grid_data(const SDEProblem& problem, const SampledPath& path, std::vector<double> times);

/// One application of the Picard map on grid indices [begin, end]: rows
/// before `begin` are history, row `begin` is kept, and
/// Y_{k+1} = Y_k + K(t_k, G) dA_k + F(t_k, G) dS_k for k in [begin, end).
/// `history_sup` is max_{j<begin} |G_j|.
Matrix picard_apply(const SDEProblem& problem, const SampledPath& path, const GridData& grid, const Matrix& G,
                    std::size_t begin, std::size_t end, double history_sup);

enum class InitialGuess {
  hold,     // freeze the value at the window start
  shifted,  // the same plus one in every coordinate
};

struct WindowResult {
  std::size_t begin = 0;  // grid index of the window start
  std::size_t end = 0;    // grid index of the window end
  double start = 0.0;
  double stop = 0.0;
  bool closed = false;
  std::size_t grid_points = 0;   // end - begin + 1
  std::size_t iterations = 0;    // first k >= 1 with G_k a fixed point to tol
  std::size_t applications = 0;  // Picard maps applied
  double final_distance = 0.0;
  bool converged = false;
  bool stabilized = true;  // G_{k+1} == G_k on the first k+1 points, bit for bit
};

/// Picard iteration on one window; X holds the solution so far and receives
/// the window's values.
WindowResult solve_window(const SDEProblem& problem, const SampledPath& path, const GridData& grid, Matrix& X,
                          std::size_t begin, std::size_t end, InitialGuess guess = InitialGuess::hold);

struct Solution {
  AdaptedProcess X{{0.0}, Matrix::Zero(1, 1)};
  int level = 0;
  WindowThresholds thresholds;
  Schedule schedule;
  std::vector<WindowResult> windows;
  bool converged = true;
  bool stabilized = true;
  bool patching_ok = true;
  double qv_trace_T = 0.0;
  std::size_t window_bound = 0;  // floor(M / r) + floor(|[S]|_T / q) + 2
  bool covering_ok = true;         // k + l >= n + 1 at every closed theta_n
  double residual = 0.0;         // max over the grid of the equation residual
  bool residual_ok = true;
};

/// Window-by-window Picard solution.
Solution solve(const SDEProblem& problem, const SampledPath& path, InitialGuess guess = InitialGuess::hold);

/// Forward recursion on the same working grid as solve.
Solution solve_direct(const SDEProblem& problem, const SampledPath& path);

/// max over the grid of |X - X'| for two solutions on the same grid.
double solution_distance(const Solution& a, const Solution& b);

/// x0 exp(A_t - sigma^2 [S]_t / 2 + sigma (S_t - S_0)) at the given times.
AdaptedProcess black_scholes_exact(double x0, double sigma, const DriftProcess& drift, const SampledPath& path,
                                   const QVMatrixPath& qv, std::span<const double> times);
AdaptedProcess black_scholes_exact(double x0, double sigma, const DriftProcess& drift, const SampledPath& path,
                                   const QVMatrixPath& qv);

struct LipschitzCheck {
  double worst_ratio = 0.0;  // max (|dK| + |dF|) / sup |X - Y|
  bool ok = true;
};

/// Samples pairs of random candidate processes on the working grid and
/// compares the coefficient gap to L times their running-sup distance.
LipschitzCheck check_lipschitz(const SDEProblem& problem, const SampledPath& path, std::size_t pairs,
                               std::uint64_t seed);

/// `t,x1,...,xd`
void write_solution_csv(std::ostream& out, const AdaptedProcess& X);

}  // namespace pathwise
