#include <doctest.h>

#include <sstream>

#include "pathwise/error.hpp"
#include "pathwise/paths.hpp"
#include "support.hpp"

using namespace pathwise;
using testing_support::scalar_path;

TEST_SUITE("paths") {
  TEST_CASE("load_path reads the grid verbatim") {
    std::istringstream in("t,x1\n0,0\n0.5,0.25\n1,1\n");
    const auto p = load_path(in);
    CHECK(p.steps() == 2);
    CHECK(p.horizon() == 1.0);
    CHECK(p.value(1, 0) == 0.25);
  }

  TEST_CASE("load_path two columns") {
    std::istringstream in("t,x1,x2\n0,1,2\n1,3,4\n");
    const auto p = load_path(in);
    CHECK(p.dim() == 2);
    CHECK(p.value(1, 1) == 4.0);
  }

  TEST_CASE("load_path rejects repeated times") {
    std::istringstream in("t,x1\n0,0\n0.5,1\n0.5,2\n");
    CHECK_THROWS_AS(load_path(in), ValidationError);
  }

  TEST_CASE("load_path reports the offending line") {
    std::istringstream in("t,x1\n0,0\n0.5,abc\n1,1\n");
    try {
      load_path(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }

  TEST_CASE("load_path rejects short files, bad headers and ragged rows") {
    std::istringstream one("t,x1\n0,0\n");
    CHECK_THROWS_AS(load_path(one), Error);
    std::istringstream header("time,x\n0,0\n1,1\n");
    CHECK_THROWS_AS(load_path(header), ParseError);
    std::istringstream ragged("t,x1,x2\n0,0,0\n1,1\n");
    CHECK_THROWS_AS(load_path(ragged), ParseError);
    std::istringstream empty("");
    CHECK_THROWS_AS(load_path(empty), Error);
  }

  TEST_CASE("save then load is bit exact") {
    RandomWalkSpec spec;
    spec.seed = 11;
    spec.steps = 257;
    spec.dim = 3;
    spec.horizon = 0.7;
    spec.vol = 0.3;
    const auto p = generate_random_walk(spec);
    std::stringstream buf;
    save_path(buf, p);
    const auto q = load_path(buf);
    CHECK(q.same_as(p));
  }

  TEST_CASE("random walk basics") {
    RandomWalkSpec spec;
    spec.vol = 0.0;
    const auto flat = generate_random_walk(spec);
    CHECK(flat.values().cwiseAbs().maxCoeff() == 0.0);

    spec.vol = 1.0;
    spec.seed = 5;
    CHECK(generate_random_walk(spec).same_as(generate_random_walk(spec)));
    auto other = spec;
    other.seed = 6;
    CHECK_FALSE(generate_random_walk(spec).same_as(generate_random_walk(other)));

    spec.steps = 0;
    CHECK_THROWS_AS(generate_random_walk(spec), ValidationError);
    spec.steps = 4;
    spec.horizon = 0.0;
    CHECK_THROWS_AS(generate_random_walk(spec), ValidationError);
    spec.horizon = 1.0;
    spec.vol = -1.0;
    CHECK_THROWS_AS(generate_random_walk(spec), ValidationError);
  }

  TEST_CASE("random walk increments have variance T/N") {
    RandomWalkSpec spec;
    spec.seed = 1;
    spec.steps = std::size_t{1} << 16;
    const auto p = generate_random_walk(spec);
    const auto n = static_cast<double>(spec.steps);
    double mean = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < spec.steps; ++k) {
      const double dx = p.value(k + 1, 0) - p.value(k, 0);
      mean += dx;
      sq += dx * dx;
    }
    mean /= n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(var * n - 1.0) < 0.05);
    // S_T has unit variance; five standard deviations is generous.
    CHECK(std::abs(mean * n) < 5.0);
  }

  TEST_CASE("increment on linear paths") {
    const auto p = scalar_path({0.0, 2.0}, {0.0, 2.0});
    CHECK(increment(p, 0.5, 1.5)(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(increment(p, 0.7, 0.7)(0) == 0.0);
    CHECK_THROWS_AS(increment(p, -0.1, 1.0), DomainError);
    CHECK_THROWS_AS(increment(p, 0.0, 2.5), DomainError);

    const auto q = testing_support::path2({0.0, 1.0}, {0.0, 1.0}, {0.0, 2.0});
    const Vector inc = increment(q, 0.0, 1.0);
    CHECK(inc(0) == 1.0);
    CHECK(inc(1) == 2.0);
  }

  TEST_CASE("increment is additive") {
    RandomWalkSpec spec;
    spec.seed = 2;
    spec.steps = 64;
    spec.dim = 2;
    const auto p = generate_random_walk(spec);
    for (double u : {0.0, 0.11, 0.3}) {
      for (double v : {0.3, 0.47, 0.5}) {
        for (double w : {0.5, 0.93, 1.0}) {
          const Vector lhs = increment(p, u, w);
          const Vector rhs = increment(p, u, v) + increment(p, v, w);
          CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-14);
        }
      }
    }
  }

  TEST_CASE("running sup examples") {
    AdaptedProcess c({0.0, 1.0, 2.0}, Matrix::Constant(3, 1, -4.0));
    CHECK(running_sup(c, 0.0) == 4.0);
    CHECK(running_sup(c, 1.5) == 4.0);

    Matrix v(4, 1);
    v << 0, 3, -5, 2;
    AdaptedProcess s({0.0, 1.0, 2.0, 3.0}, v);
    const auto series = running_sup_series(s);
    CHECK(series == std::vector<double>{0, 3, 5, 5});

    Matrix w(2, 1);
    w << 1, -1;
    AdaptedProcess g({0.0, 2.0}, w);
    CHECK(running_sup(g, 2.0) == 1.0);
    CHECK(running_sup(g, 1.0) == 1.0);
    CHECK_THROWS_AS(running_sup(g, 3.0), DomainError);
  }

  TEST_CASE("running sup includes the interpolated value at t") {
    Matrix v(2, 1);
    v << 0, 4;
    AdaptedProcess s({0.0, 1.0}, v);
    CHECK(running_sup(s, 0.25) == doctest::Approx(1.0));
  }

  TEST_CASE("running sup is non-decreasing") {
    RandomWalkSpec spec;
    spec.seed = 8;
    spec.steps = 200;
    spec.dim = 2;
    const auto p = generate_random_walk(spec);
    AdaptedProcess proc(testing_support::vec(p.times()), p.values());
    double prev = 0.0;
    for (int k = 0; k <= 400; ++k) {
      const double s = running_sup(proc, k / 400.0);
      CHECK(s >= prev);
      prev = s;
    }
  }

  TEST_CASE("constructor validation") {
    CHECK_THROWS_AS(scalar_path({0.0}, {1.0}), ValidationError);
    CHECK_THROWS_AS(scalar_path({0.1, 1.0}, {0.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(scalar_path({0.0, 1.0, 0.5}, {0.0, 1.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(scalar_path({0.0, 1.0}, {0.0, NAN}), ValidationError);
  }

  TEST_CASE("prefix and combine") {
    const auto p = scalar_path({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0});
    const auto pre = p.prefix(1.5);
    CHECK(pre.horizon() == 1.5);
    CHECK(pre.value(2, 0) == doctest::Approx(0.5));
    const auto q = testing_support::path2({0.0, 1.0}, {1.0, 2.0}, {3.0, 5.0});
    const std::vector<double> w{1.0, -1.0};
    const auto c = q.combine(w);
    CHECK(c.value(1, 0) == -3.0);
  }
}
