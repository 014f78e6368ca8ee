#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "pathwise/sde.hpp"

namespace pathwise {

/// A parsed problem file together with what the closed-form oracle needs.
struct ProblemSpec {
  SDEProblem problem;
  std::string k_type;
  std::string f_type;
  double k_scale = 0.0;
  double f_scale = 0.0;
  double x0_scalar = 0.0;  // first coordinate of the constant start
  bool x0_shift = false;   // X_0 = x0 + omega(0)
};

/// Problem file, JSON:
///
///   {"dim": 1, "x0": 1.0,
///    "K": {"type": "linear", "scale": 1.0},
///    "F": {"type": "linear", "scale": 0.3},
///    "drift": {"type": "linear", "up": 0.1, "down": 0.0},
///    "M": 0.2, "L": 1.3, "c1": 6, "level": 8, "tol": 1e-12, "max_iter": 100}
///
/// Coefficient types: constant (scale or value array), linear, running_max.
/// x0 is a number or an array; "x0_mode": "shift" adds omega(0). M defaults
/// to (up + down) T; L defaults to the coefficients' declared constants.
/// `horizon` is the path horizon the drift must cover. Throws ParseError on
/// malformed JSON and ValidationError on bad fields.
ProblemSpec load_problem(std::istream& in, double horizon);

/// The closed-form oracle applies: d = 1, K = X, F = sigma X, constant start.
bool black_scholes_applies(const ProblemSpec& spec);

}  // namespace pathwise
