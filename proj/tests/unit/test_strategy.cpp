#include <doctest.h>

#include <sstream>

#include "pathwise/error.hpp"
#include "pathwise/lebesgue.hpp"
#include "pathwise/strategy.hpp"
#include "support.hpp"

using namespace pathwise;
using namespace testing_support;

namespace {

SampledPath walk(std::uint64_t seed, std::size_t steps, std::size_t dim, double vol = 1.0) {
  RandomWalkSpec s;
  s.seed = seed;
  s.steps = steps;
  s.dim = dim;
  s.vol = vol;
  return generate_random_walk(s);
}

Vector one(double v) { return Vector::Constant(1, v); }

StrategyRealization two_step_linear() {
  const auto p = scalar_path({0.0, 1.0}, {0.0, 1.0});
  Matrix g(2, 1);
  g << 1, 2;
  return StrategyRealization(p, {0.0, 0.5}, g);
}

}  // namespace

TEST_SUITE("strategy") {
  TEST_CASE("buy and hold realizes to a single entry") {
    const auto p = walk(1, 50, 2);
    const Vector g = Vector::Constant(2, 0.5);
    const auto r = realize(BuyAndHoldRule(g), p);
    CHECK(r.size() == 1);
    CHECK(r.times()[0] == 0.0);
    CHECK(r.position(0) == g);
  }

  TEST_CASE("Lebesgue rule on a linear path") {
    const auto p = scalar_path({0.0, 1.0}, {0.0, 1.0});
    const auto r = realize(LebesgueRule(1, [](const SampledPath&, double) { return one(1.0); }), p);
    CHECK(vec(r.times()) == std::vector<double>{0.0, 0.5, 1.0});
  }

  TEST_CASE("zero rule has zero positions and zero gains") {
    const auto p = walk(2, 100, 1);
    const auto r = realize(GridRule(7, [](const SampledPath&, double) { return one(0.0); }), p);
    CHECK(r.positions().cwiseAbs().maxCoeff() == 0.0);
    for (double t : {0.0, 0.3, 1.0}) CHECK(integrate(r, t) == 0.0);
  }

  TEST_CASE("runaway stopping rule hits the cap") {
    const auto p = scalar_path({0.0, 1.0}, {0.0, 1.0});
    CallbackRule rule([](const SampledPath&, double after) { return std::optional<double>(after + 1e-9); },
                      [](const SampledPath&, double) { return one(1.0); });
    try {
      realize(rule, p, 1000);
      FAIL("expected the cap to trigger");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("1000") != std::string::npos);
    }
  }

  TEST_CASE("integrals") {
    const auto p = walk(3, 64, 1);
    const auto hold = realize(BuyAndHoldRule(one(1.0)), p);
    for (double t : {0.0, 0.2, 0.55, 1.0}) CHECK(integrate(hold, t) == doctest::Approx(p.eval(t, 0) - p.eval(0.0, 0)));
    const auto r = two_step_linear();
    CHECK(integrate(r, 1.0) == doctest::Approx(1.5));
    CHECK(integrate(r, 0.25) == doctest::Approx(0.25));
    CHECK(r.position_at(0.5)(0) == 1.0);
    CHECK(r.position_at(0.51)(0) == 2.0);
    CHECK(r.position_after(0.5)(0) == 2.0);
    CHECK(r.sup_norm(0.5) == 1.0);
    CHECK(r.sup_norm(1.0) == 2.0);
  }

  TEST_CASE("vector integrals of matrix strategies") {
    const auto p = path2({0.0, 1.0}, {0.0, 1.0}, {0.0, 2.0});
    std::vector<StrategyRealization> rows{realize(BuyAndHoldRule(Vector::Unit(2, 0)), p),
                                          realize(BuyAndHoldRule(Vector::Unit(2, 1)), p)};
    const Vector v = integrate_rows(rows, 1.0);
    CHECK(v(0) == 1.0);
    CHECK(v(1) == 2.0);
  }

  TEST_CASE("integral against quadratic variation") {
    const auto p = walk(4, 256, 1);
    const auto q = qv_path(p, 5);
    const auto unit = realize(BuyAndHoldRule(one(1.0)), p);
    const auto two = realize(BuyAndHoldRule(one(2.0)), p);
    const auto zero = realize(BuyAndHoldRule(one(0.0)), p);
    double prev = 0.0;
    for (double t : {0.0, 0.1, 0.4, 0.8, 1.0}) {
      const double a = integral_qv(unit, q, t);
      CHECK(a == doctest::Approx(q.trace_at(t)));
      CHECK(integral_qv(two, q, t) == doctest::Approx(4 * a));
      CHECK(integral_qv(zero, q, t) == 0.0);
      CHECK(a >= prev);
      prev = a;
    }
    CHECK(integral_qv(unit, q, 0.0) == 0.0);
    const auto other = walk(5, 256, 1);
    CHECK_THROWS_AS(integral_qv(realize(BuyAndHoldRule(one(1.0)), other), q, 1.0), ValidationError);

    const std::vector<double> ts{1.0, 0.25, 0.5};
    const auto series = integral_qv_series(unit, q, ts);
    for (std::size_t k = 0; k < ts.size(); ++k) CHECK(series[k] == doctest::Approx(integral_qv(unit, q, ts[k])));
  }

  TEST_CASE("qv_norm") {
    const auto p = walk(6, 256, 2);
    const auto q = qv_path(p, 4);
    std::vector<StrategyRealization> unit{realize(BuyAndHoldRule(Vector::Unit(2, 0)), p),
                                          realize(BuyAndHoldRule(Vector::Unit(2, 1)), p)};
    CHECK(qv_norm(unit, q, 1.0) == doctest::Approx(q.trace_at(1.0)));
    std::vector<StrategyRealization> zero{realize(BuyAndHoldRule(Vector::Zero(2)), p),
                                          realize(BuyAndHoldRule(Vector::Zero(2)), p)};
    CHECK(qv_norm(zero, q, 1.0) == 0.0);
    std::vector<StrategyRealization> short_rows{unit[0]};
    CHECK_THROWS_AS(qv_norm(short_rows, q, 1.0), ValidationError);

    const auto p1 = walk(6, 256, 1);
    const auto q1 = qv_path(p1, 4);
    std::vector<StrategyRealization> single{realize(BuyAndHoldRule(one(1.5)), p1)};
    CHECK(qv_norm(single, q1, 0.7) == doctest::Approx(integral_qv(single[0], q1, 0.7)));
  }

  TEST_CASE("truncation") {
    const auto p = walk(7, 512, 1);
    const auto q = qv_path(p, 6);
    const double total = q.trace_at(1.0);
    const auto g = realize(GridRule(16, [](const SampledPath& path, double t) { return one(std::cos(path.eval(t, 0))); }), p);

    const auto same = truncate(g, total + 1.0, q);
    for (double t : {0.3, 1.0}) CHECK(integrate(same, t) == doctest::Approx(integrate(g, t)));

    const auto none = truncate(g, 0.0, q);
    CHECK(integral_qv(none, q, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(std::abs(integrate(none, 1.0)) < 1e-15);

    const double half = total / 2;
    const auto cut = truncate(g, half, q);
    for (double t : check_times(cut)) {
      const double lhs = integral_qv(cut, q, t);
      CHECK(lhs <= cut.path().dim() * std::pow(g.sup_norm(t), 2) * half + 1e-12);
    }
    CHECK_THROWS_AS(truncate(g, -1.0, q), DomainError);
  }

  TEST_CASE("admissibility") {
    const auto p = scalar_path({0.0, 1.0, 2.0}, {0.0, -2.0, -1.0});
    CHECK(check_admissible(realize(BuyAndHoldRule(one(0.0)), p), 0.0).admissible);
    const auto hold = realize(BuyAndHoldRule(one(1.0)), p);
    const auto bad = check_admissible(hold, 1.0);
    CHECK_FALSE(bad.admissible);
    CHECK(bad.min_value == doctest::Approx(-2.0));
    REQUIRE(bad.first_violation.has_value());
    CHECK(*bad.first_violation <= 1.0);
    CHECK(check_admissible(hold, 2.0).admissible);
    CHECK_THROWS_AS(check_admissible(hold, -0.5), DomainError);
  }

  TEST_CASE("linearity on a shared schedule") {
    const auto p = walk(8, 300, 2, 0.7);
    const auto g = realize(LebesgueRule(3, [](const SampledPath& path, double t) { return Vector(path.eval(t).array().sin()); }), p);
    const auto h = realize(GridRule(11, [](const SampledPath& path, double t) { return Vector(path.eval(t).array().cos()); }), p);
    const auto gh = linear_combination(0.7, g, -1.3, h);
    const auto gr = refine(g, h.times());
    for (double t : {0.0, 0.17, 0.5, 0.91, 1.0}) {
      CHECK(integrate(gh, t) == doctest::Approx(0.7 * integrate(g, t) - 1.3 * integrate(h, t)).epsilon(1e-12));
      CHECK(integrate(gr, t) == doctest::Approx(integrate(g, t)).epsilon(1e-12));
    }
  }

  TEST_CASE("prefix replay: rules only look at the past") {
    const auto p = walk(9, 400, 1, 0.6);
    LebesgueRule rule(4, [](const SampledPath& path, double t) { return one(std::tanh(path.eval(t, 0))); });
    const auto full = realize(rule, p);
    for (double cut : {0.25, 0.5, 0.8125}) {
      const auto pre = realize(rule, p.prefix(cut));
      std::size_t n = 0;
      while (n < full.size() && full.times()[n] <= cut) ++n;
      // The prefix may close one extra crossing at the cut itself.
      REQUIRE(pre.size() >= n);
      for (std::size_t k = 0; k < n; ++k) {
        CHECK(std::abs(pre.times()[k] - full.times()[k]) <= 1e-12);
        CHECK(std::abs(pre.position(k)(0) - full.position(k)(0)) <= 1e-12);
      }
    }
  }

  TEST_CASE("realization validation and CSV") {
    const auto p = scalar_path({0.0, 1.0}, {0.0, 1.0});
    CHECK_THROWS_AS(StrategyRealization(p, {0.5}, Matrix::Ones(1, 1)), ValidationError);
    CHECK_THROWS_AS(StrategyRealization(p, {0.0, 0.5}, Matrix::Ones(1, 1)), ValidationError);
    CHECK_THROWS_AS(StrategyRealization(p, {0.0}, Matrix::Ones(1, 2)), ValidationError);
    std::ostringstream out;
    write_realization_csv(out, two_step_linear());
    CHECK(out.str() == "l,tau,g1\n0,0,1\n1,0.5,2\n");
  }
}
