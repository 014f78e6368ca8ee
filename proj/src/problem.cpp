#include "pathwise/problem.hpp"

#include <istream>
#include <iterator>

#include <json.hpp>

#include "pathwise/error.hpp"

namespace pathwise {

namespace {

using nlohmann::json;

double number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(std::string("field `") + key + "` must be a number");
  return v.get<double>();
}

Vector vector_field(const json& v, std::size_t d, const char* what) {
  if (v.is_number()) return Vector::Constant(static_cast<Eigen::Index>(d), v.get<double>());
  if (!v.is_array() || v.size() != d) {
    throw ValidationError(std::string(what) + " must be a number or an array of " + std::to_string(d) + " numbers");
  }
  Vector out(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    if (!v[i].is_number()) throw ValidationError(std::string(what) + " entries must be numbers");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

std::shared_ptr<const Coefficient> coefficient(const json& obj, CoefficientRole role, std::size_t d, std::string& type,
                                               double& scale) {
  const char* label = role == CoefficientRole::drift ? "K" : "F";
  if (!obj.is_object()) throw ValidationError(std::string("`") + label + "` must be an object");
  if (!obj.contains("type") || !obj.at("type").is_string()) {
    throw ValidationError(std::string("`") + label + ".type` is required");
  }
  type = obj.at("type").get<std::string>();
  scale = number(obj, "scale", 0.0);
  if (type == "constant") {
    if (obj.contains("value")) {
      const std::size_t n = role == CoefficientRole::drift ? d : d * d;
      return std::make_shared<ConstantCoefficient>(vector_field(obj.at("value"), n, "constant value"));
    }
    return ConstantCoefficient::scalar(scale, role, d);
  }
  if (type == "linear") return std::make_shared<LinearCoefficient>(scale, role);
  if (type == "running_max") {
    if (role != CoefficientRole::drift) throw ValidationError("running_max is only available for K");
    return std::make_shared<RunningMaxCoefficient>(scale);
  }
  throw ValidationError(std::string("unknown coefficient type `") + type + "`");
}

}  // namespace

ProblemSpec load_problem(std::istream& in, double horizon) {
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; turn it into a line number.
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i) line += text[i] == '\n';
    throw ParseError(line, "malformed problem JSON");
  }
  if (!doc.is_object()) throw ValidationError("problem file must hold a JSON object");

  ProblemSpec spec;
  auto& p = spec.problem;
  const double dim = number(doc, "dim", 1.0);
  if (!(dim >= 1.0) || dim != static_cast<double>(static_cast<std::size_t>(dim))) {
    throw ValidationError("`dim` must be a positive integer");
  }
  p.dim = static_cast<std::size_t>(dim);

  if (!doc.contains("x0")) throw ValidationError("`x0` is required");
  const Vector x0 = vector_field(doc.at("x0"), p.dim, "`x0`");
  spec.x0_scalar = x0(0);
  const std::string mode = doc.value("x0_mode", std::string("constant"));
  if (mode == "constant") {
    p.x0 = constant_start(x0);
  } else if (mode == "shift") {
    spec.x0_shift = true;
    p.x0 = [x0](const Vector& omega0) { return Vector(x0 + omega0); };
  } else {
    throw ValidationError("`x0_mode` must be constant or shift");
  }

  if (!doc.contains("K") || !doc.contains("F")) throw ValidationError("`K` and `F` are required");
  p.K = coefficient(doc.at("K"), CoefficientRole::drift, p.dim, spec.k_type, spec.k_scale);
  p.F = coefficient(doc.at("F"), CoefficientRole::diffusion, p.dim, spec.f_type, spec.f_scale);

  double up = 0.0;
  double down = 0.0;
  if (doc.contains("drift")) {
    const auto& dr = doc.at("drift");
    if (!dr.is_object() || dr.value("type", std::string("linear")) != "linear") {
      throw ValidationError("`drift.type` must be linear");
    }
    up = number(dr, "up", 0.0);
    down = number(dr, "down", 0.0);
  }
  const double M = number(doc, "M", (up + down) * horizon);
  p.drift = DriftProcess::linear(up, down, horizon, M);

  if (doc.contains("L")) p.L = number(doc, "L", 0.0);
  p.c1 = number(doc, "c1", kDefaultC1);
  if (doc.contains("level")) p.level = static_cast<int>(number(doc, "level", 0.0));
  p.tol = number(doc, "tol", 1e-12);
  if (doc.contains("max_iter")) {
    const double m = number(doc, "max_iter", 0.0);
    if (!(m >= 1.0)) throw ValidationError("`max_iter` must be at least 1");
    p.max_iter = static_cast<std::size_t>(m);
  }
  return spec;
}

bool black_scholes_applies(const ProblemSpec& spec) {
  return spec.problem.dim == 1 && !spec.x0_shift && spec.k_type == "linear" && spec.k_scale == 1.0 &&
         spec.f_type == "linear";
}

}  // namespace pathwise
