#include <doctest.h>

#include <sstream>

#include "pathwise/error.hpp"
#include "pathwise/lebesgue.hpp"
#include "pathwise/sde.hpp"
#include "support.hpp"

using namespace pathwise;
using namespace testing_support;

namespace {

SampledPath walk(std::uint64_t seed, std::size_t steps, std::size_t dim = 1, double vol = 1.0) {
  RandomWalkSpec s;
  s.seed = seed;
  s.steps = steps;
  s.dim = dim;
  s.vol = vol;
  return generate_random_walk(s);
}

SDEProblem make(std::size_t d, std::shared_ptr<const Coefficient> K, std::shared_ptr<const Coefficient> F,
                double up = 0.0, double x0 = 1.0) {
  SDEProblem p;
  p.dim = d;
  p.x0 = constant_start(Vector::Constant(static_cast<Eigen::Index>(d), x0));
  p.K = std::move(K);
  p.F = std::move(F);
  p.drift = DriftProcess::linear(up, 0.0, 1.0, up);
  return p;
}

SDEProblem black_scholes(double sigma, double x0 = 1.0) {
  return make(1, std::make_shared<LinearCoefficient>(1.0, CoefficientRole::drift),
              std::make_shared<LinearCoefficient>(sigma, CoefficientRole::diffusion), 0.1, x0);
}

double bs_gap(const SDEProblem& p, const SampledPath& path, double sigma) {
  const auto sol = solve_direct(p, path);
  const auto exact = black_scholes_exact(1.0, sigma, p.drift, path, qv_path(path, sol.level), sol.X.times());
  double gap = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k) {
    const double e = exact.values()(static_cast<Eigen::Index>(k), 0);
    gap = std::max(gap, std::abs(sol.X.values()(static_cast<Eigen::Index>(k), 0) - e) / std::abs(e));
  }
  return gap;
}

void check_solution_invariants(const Solution& s) {
  CHECK(s.converged);
  CHECK(s.stabilized);
  CHECK(s.patching_ok);
  CHECK(s.covering_ok);
  CHECK(s.residual_ok);
  CHECK(s.schedule.thetas.size() <= s.window_bound);
  for (const auto& w : s.windows) CHECK(w.iterations <= w.grid_points);
}

}  // namespace

TEST_SUITE("sde") {
  TEST_CASE("window thresholds") {
    auto w = window_thresholds(1.0, 1, 6.0);
    CHECK(w.q == 1.0 / 144.0);
    CHECK(w.r == 1.0 / 3.0);
    w = window_thresholds(2.0, 1, 6.0);
    CHECK(w.q == 1.0 / 576.0);
    CHECK(w.r == 1.0 / 6.0);
    w = window_thresholds(1.0, 2, 6.0);
    CHECK(w.q == 1.0 / 2304.0);
    CHECK(w.r == 1.0 / 3.0);
    w = window_thresholds(0.0, 3);
    CHECK(std::isinf(w.q));
    CHECK(std::isinf(w.r));
    CHECK_THROWS_AS(window_thresholds(-1.0, 1), DomainError);
    CHECK_THROWS_AS(window_thresholds(1.0, 0), DomainError);
  }

  TEST_CASE("schedules") {
    const MonotoneCurve none{{0.0, 1.0}, {0.0, 0.0}};
    const MonotoneCurve linear{{0.0, 1.0}, {0.0, 1.0}};

    const auto open = window_schedule(MonotoneCurve{{0.0, 1.0}, {0.0, 0.001}}, none, 1.0 / 144, 1.0 / 3, 1.0);
    CHECK(open.thetas.empty());

    const auto by_qv = window_schedule(linear, none, 1.0 / 144, 1.0 / 3, 1.0);
    REQUIRE(by_qv.thetas.size() >= 143);
    for (std::size_t k = 0; k < by_qv.thetas.size(); ++k) {
      CHECK(by_qv.thetas[k] == doctest::Approx((k + 1) / 144.0).epsilon(1e-12));
      CHECK(by_qv.by_qv[k] == 1);
    }

    const auto by_drift = window_schedule(MonotoneCurve{{0.0, 1.0}, {0.0, 0.001}}, linear, 1.0 / 144, 1.0 / 3, 1.0);
    REQUIRE_FALSE(by_drift.thetas.empty());
    CHECK(by_drift.thetas[0] == doctest::Approx(1.0 / 3));
    CHECK(by_drift.by_qv[0] == 0);

    CHECK_THROWS_AS(window_schedule(linear, none, 0.0, 1.0, 1.0), DomainError);
  }

  TEST_CASE("monotone curve lookup") {
    const MonotoneCurve c{{0.0, 1.0, 2.0}, {0.0, 1.0, 1.0}};
    CHECK(c.eval(0.5) == 0.5);
    CHECK(*c.first_reach(0.0, 0.25) == 0.25);
    CHECK(*c.first_reach(1.5, 1.0) == 1.5);
    CHECK_FALSE(c.first_reach(0.0, 2.0).has_value());
  }

  TEST_CASE("drift validation") {
    CHECK_THROWS_AS(DriftProcess({0.0}, {0.0}, {0.0}, 1.0), ValidationError);
    CHECK_THROWS_AS(DriftProcess({0.0, 1.0}, {0.0, -1.0}, {0.0, 0.0}, 1.0), ValidationError);
    CHECK_THROWS_AS(DriftProcess({0.0, 1.0}, {0.5, 1.0}, {0.0, 0.0}, 2.0), ValidationError);
    CHECK_THROWS_AS(DriftProcess({0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}, 1.0), ValidationError);
    const auto d = DriftProcess::linear(0.3, 0.1, 2.0, 1.0);
    CHECK(d.value(1.0) == doctest::Approx(0.2));
    CHECK(d.variation(2.0) == doctest::Approx(0.8));
  }

  TEST_CASE("one Picard step with constant coefficients ignores the candidate") {
    const auto path = walk(1, 64);
    auto p = make(1, ConstantCoefficient::scalar(0.7, CoefficientRole::drift, 1),
                  ConstantCoefficient::scalar(0.0, CoefficientRole::diffusion, 1), 1.0, 2.0);
    p.drift = DriftProcess::linear(1.0, 0.0, 1.0, 1.0);
    const auto grid = grid_data(p, path, vec(path.times()));
    const auto n = static_cast<Eigen::Index>(grid.times.size());
    Matrix G = Matrix::Constant(n, 1, 2.0);
    G.bottomRows(n - 1).setRandom();
    const Matrix W = picard_apply(p, path, grid, G, 0, grid.times.size() - 1, 0.0);
    for (Eigen::Index k = 0; k < n; ++k) CHECK(W(k, 0) == doctest::Approx(2.0 + 0.7 * grid.times[k]));

    auto q = make(1, ConstantCoefficient::scalar(0.0, CoefficientRole::drift, 1),
                  ConstantCoefficient::scalar(0.4, CoefficientRole::diffusion, 1), 0.0, 2.0);
    const Matrix V = picard_apply(q, path, grid, G, 0, grid.times.size() - 1, 0.0);
    for (Eigen::Index k = 0; k < n; ++k) CHECK(V(k, 0) == doctest::Approx(2.0 + 0.4 * path.value(k, 0)));
  }

  TEST_CASE("Picard map only reads the past") {
    const auto path = walk(2, 64);
    const auto p = black_scholes(0.5);
    const auto grid = grid_data(p, path, vec(path.times()));
    const auto n = static_cast<Eigen::Index>(grid.times.size());
    Matrix G = Matrix::Random(n, 1);
    Matrix H = G;
    H.bottomRows(10).setRandom();
    const std::size_t end = grid.times.size() - 10;
    const Matrix a = picard_apply(p, path, grid, G, 5, end, 0.0);
    const Matrix b = picard_apply(p, path, grid, H, 5, end, 0.0);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(picard_apply(p, path, grid, G.topRows(3), 0, 2, 0.0), ValidationError);
    CHECK_THROWS_AS(picard_apply(p, path, grid, G, 3, grid.times.size(), 0.0), ValidationError);
  }

  TEST_CASE("zero and constant coefficients") {
    const auto path = walk(3, 128);
    const auto zero = make(1, ConstantCoefficient::scalar(0.0, CoefficientRole::drift, 1),
                           ConstantCoefficient::scalar(0.0, CoefficientRole::diffusion, 1), 0.5, 3.0);
    const auto s = solve(zero, path);
    CHECK(s.X.values().cwiseAbs().maxCoeff() == 3.0);
    CHECK(s.X.values().minCoeff() == 3.0);
    REQUIRE(s.windows.size() == 1);
    CHECK(s.windows[0].iterations == 1);

    const auto c = make(1, ConstantCoefficient::scalar(0.25, CoefficientRole::drift, 1),
                        ConstantCoefficient::scalar(0.0, CoefficientRole::diffusion, 1), 0.5, 3.0);
    const auto sc = solve(c, path);
    const auto dc = solve_direct(c, path);
    for (std::size_t k = 0; k < sc.X.size(); ++k) {
      const double want = 3.0 + 0.25 * c.drift.value(sc.X.times()[k]);
      CHECK(sc.X.values()(static_cast<Eigen::Index>(k), 0) == doctest::Approx(want).epsilon(1e-14));
      CHECK(dc.X.values()(static_cast<Eigen::Index>(k), 0) == doctest::Approx(want).epsilon(1e-14));
    }
    CHECK(sc.windows[0].iterations == 1);
  }

  TEST_CASE("Black-Scholes: invariants, agreement with the forward recursion, uniqueness") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto path = walk(seed, 1024);
      const auto p = black_scholes(0.5);
      const auto s = solve(p, path);
      check_solution_invariants(s);
      CHECK(solution_distance(s, solve_direct(p, path)) < 1e-10);
      CHECK(solution_distance(s, solve(p, path, InitialGuess::shifted)) < 1e-10);
    }
  }

  TEST_CASE("Black-Scholes closed form") {
    const auto path = walk(4, 256);
    const auto drift = DriftProcess::linear(0.1, 0.0, 1.0, 0.1);
    const auto q = qv_path(path, 4);
    const auto flat = black_scholes_exact(2.0, 0.0, drift, path, q);
    for (std::size_t k = 0; k < flat.size(); ++k) {
      CHECK(flat.values()(static_cast<Eigen::Index>(k), 0) == doctest::Approx(2.0 * std::exp(0.1 * flat.times()[k])));
    }
    const auto z = black_scholes_exact(0.0, 0.7, drift, path, q);
    CHECK(z.values().cwiseAbs().maxCoeff() == 0.0);
    const auto p2 = walk(4, 16, 2);
    CHECK_THROWS_AS(black_scholes_exact(1.0, 0.5, drift, p2, qv_path(p2, 2)), DomainError);
  }

  TEST_CASE("Black-Scholes discretization gap shrinks under refinement") {
    const double sigma = 0.5;
    const auto p = black_scholes(sigma);
    double prev = INFINITY;
    for (std::size_t steps : {std::size_t{1} << 10, std::size_t{1} << 12, std::size_t{1} << 14}) {
      const double gap = bs_gap(p, walk(9, steps), sigma);
      CHECK(gap <= 0.7 * prev);
      prev = gap;
    }
  }

  TEST_CASE("window accounting on a random walk with L = 1, M = 0.2") {
    const auto path = walk(5, 2048);
    auto p = make(1, std::make_shared<LinearCoefficient>(0.5, CoefficientRole::drift),
                  std::make_shared<LinearCoefficient>(0.5, CoefficientRole::diffusion), 0.2);
    CHECK(p.lipschitz() == 1.0);
    const auto s = solve(p, path);
    CHECK(s.thresholds.q == 1.0 / 144);
    CHECK(s.thresholds.r == 1.0 / 3);
    const auto bound = static_cast<std::size_t>(std::floor(0.2 * 3) + std::floor(s.qv_trace_T * 144) + 2);
    CHECK(s.window_bound == bound);
    CHECK(s.schedule.thetas.size() <= bound);
    check_solution_invariants(s);
  }

  TEST_CASE("path-dependent drift: running maximum") {
    const auto path = walk(6, 512, 2, 0.8);
    auto p = make(2, std::make_shared<RunningMaxCoefficient>(0.5),
                  std::make_shared<LinearCoefficient>(0.3, CoefficientRole::diffusion), 0.4);
    const auto s = solve(p, path);
    check_solution_invariants(s);
    CHECK(solution_distance(s, solve_direct(p, path)) < 1e-10);
    CHECK(solution_distance(s, solve(p, path, InitialGuess::shifted)) < 1e-10);
    const auto lip = check_lipschitz(p, path, 16, 3);
    CHECK(lip.ok);
    CHECK(lip.worst_ratio <= p.lipschitz() + 1e-12);
  }

  TEST_CASE("start value may depend on omega(0)") {
    Matrix v(2, 1);
    v << 0.75, 1.25;
    const SampledPath path({0.0, 1.0}, v);
    auto p = make(1, ConstantCoefficient::scalar(0.0, CoefficientRole::drift, 1),
                  ConstantCoefficient::scalar(0.0, CoefficientRole::diffusion, 1));
    p.x0 = [](const Vector& w0) { return Vector(2 * w0); };
    CHECK(solve(p, path).X.values()(1, 0) == 1.5);
  }

  TEST_CASE("a declared Lipschitz constant that is too small is caught") {
    const auto path = walk(7, 256);
    auto K = std::make_shared<FunctionCoefficient>(
        [](std::size_t k, const EvalContext& ctx) { return Vector(3.0 * ctx.X.row(static_cast<Eigen::Index>(k)).transpose()); },
        1, 0.5);
    auto p = make(1, K, ConstantCoefficient::scalar(0.0, CoefficientRole::diffusion, 1), 1.0);
    CHECK_FALSE(check_lipschitz(p, path, 8, 1).ok);
  }

  TEST_CASE("problem validation") {
    const auto path = walk(8, 32);
    auto p = black_scholes(0.2);
    p.dim = 2;
    CHECK_THROWS_AS(solve(p, path), ValidationError);
    auto q = black_scholes(0.2);
    q.drift = DriftProcess::linear(0.1, 0.0, 0.5, 0.05);
    CHECK_THROWS_AS(solve(q, path), ValidationError);
    auto r = black_scholes(0.2);
    r.K = nullptr;
    CHECK_THROWS_AS(solve(r, path), ValidationError);
  }

  TEST_CASE("solution CSV") {
    std::ostringstream out;
    Matrix v(2, 1);
    v << 1, 1.5;
    write_solution_csv(out, AdaptedProcess({0.0, 1.0}, v));
    CHECK(out.str() == "t,x1\n0,1\n1,1.5\n");
  }
}
