#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pathwise/bdg.hpp"
#include "pathwise/error.hpp"
#include "pathwise/lebesgue.hpp"
#include "pathwise/paths.hpp"
#include "pathwise/problem.hpp"
#include "pathwise/quadvar.hpp"
#include "pathwise/sde.hpp"

namespace py = pybind11;
using namespace pathwise;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

ProblemSpec parse_problem(const std::string& text, double horizon) {
  std::istringstream in(text);
  return load_problem(in, horizon);
}

py::dict solution_dict(const Solution& s) {
  py::list windows;
  for (const auto& w : s.windows) {
    py::dict d;
    d["start"] = w.start;
    d["stop"] = w.stop;
    d["closed"] = w.closed;
    d["grid_points"] = w.grid_points;
    d["iterations"] = w.iterations;
    d["converged"] = w.converged;
    d["stabilized"] = w.stabilized;
    windows.append(d);
  }
  py::dict out;
  out["times"] = to_vec(s.X.times());
  out["values"] = s.X.values();
  out["level"] = s.level;
  out["q"] = s.thresholds.q;
  out["r"] = s.thresholds.r;
  out["thetas"] = s.schedule.thetas;
  out["windows"] = windows;
  out["window_bound"] = s.window_bound;
  out["qv_trace_T"] = s.qv_trace_T;
  out["converged"] = s.converged;
  out["stabilized"] = s.stabilized;
  out["patching_ok"] = s.patching_ok;
  out["covering_ok"] = s.covering_ok;
  out["residual"] = s.residual;
  out["residual_ok"] = s.residual_ok;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pathwise quadratic variation, BDG hedges and path-driven integral equations";

  // Library errors surface as ValueError with the kind prefixed.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(PyExc_ValueError, (std::string(e.kind()) + ": " + e.what()).c_str());
    }
  });

  py::class_<SampledPath>(m, "SampledPath")
      .def(py::init<std::vector<double>, Matrix>(), py::arg("times"), py::arg("values"))
      .def_property_readonly("dim", &SampledPath::dim)
      .def_property_readonly("horizon", &SampledPath::horizon)
      .def_property_readonly("times", [](const SampledPath& p) { return to_vec(p.times()); })
      .def_property_readonly("values", &SampledPath::values)
      .def("eval", py::overload_cast<double>(&SampledPath::eval, py::const_), py::arg("t"))
      .def("__len__", &SampledPath::size);

  m.def(
      "random_walk",
      [](std::uint64_t seed, std::size_t steps, double horizon, std::size_t dim, double vol) {
        return generate_random_walk({seed, steps, horizon, dim, vol});
      },
      py::arg("seed") = 1, py::arg("steps") = 1024, py::arg("horizon") = 1.0, py::arg("dim") = 1,
      py::arg("vol") = 1.0);
  m.def(
      "load_path",
      [](const std::string& text) {
        std::istringstream in(text);
        return load_path(in);
      },
      py::arg("csv_text"));
  m.def(
      "save_path",
      [](const SampledPath& p) {
        std::ostringstream out;
        save_path(out, p);
        return out.str();
      },
      py::arg("path"));

  m.def(
      "scalar_partition",
      [](const std::vector<double>& t, const std::vector<double>& x, int level) {
        return scalar_partition(t, x, level).times;
      },
      py::arg("times"), py::arg("values"), py::arg("level"));
  m.def(
      "merged_partition", [](const SampledPath& p, int level) { return merged_partition(p, level).times; },
      py::arg("path"), py::arg("level"));
  m.def("resolution_level", &resolution_level, py::arg("path"));

  m.def("qv_level", &qv_level, py::arg("path"), py::arg("level"), py::arg("t"));
  py::class_<QVMatrixPath>(m, "QVMatrixPath")
      .def_property_readonly("level", &QVMatrixPath::level_used)
      .def_property_readonly("converged", &QVMatrixPath::converged)
      .def_property_readonly("times", [](const QVMatrixPath& q) { return to_vec(q.times()); })
      .def_property_readonly("traces", &QVMatrixPath::traces)
      .def_property_readonly("level_distances", &QVMatrixPath::level_distances)
      .def("at", &QVMatrixPath::at, py::arg("t"))
      .def("trace_at", &QVMatrixPath::trace_at, py::arg("t"));
  m.def("qv_path", &qv_path, py::arg("path"), py::arg("level"));
  m.def(
      "qv",
      [](const SampledPath& p, double tol, int n_max) {
        QVOptions o;
        o.tol = tol;
        o.n_max = n_max;
        return qv(p, o);
      },
      py::arg("path"), py::arg("tol") = QVOptions{}.tol, py::arg("n_max") = QVOptions{}.n_max);

  m.def("hedge_sequence", [](const std::vector<double>& x) { return hedge_sequence(x); }, py::arg("x"));
  m.def(
      "verify_pathwise_bdg",
      [](const std::vector<double>& x, double c1) {
        const auto r = verify_pathwise_bdg(x, c1);
        py::dict d;
        d["upper_ok"] = r.upper_ok;
        d["lower_ok"] = r.lower_ok;
        d["bs_lower_ok"] = r.bs_lower_ok;
        d["upper_margin"] = r.upper_margin;
        d["lower_margin"] = r.lower_margin;
        d["max_abs_f"] = r.max_abs_f;
        return d;
      },
      py::arg("x"), py::arg("c1") = kDefaultC1);
  m.def(
      "bdg_sweep",
      [](std::uint64_t seed, std::size_t count, std::size_t max_length) {
        const auto s = bdg_sweep(seed, count, max_length);
        py::dict d;
        d["sequences"] = s.sequences;
        d["upper_violations"] = s.upper_violations;
        d["lower_violations"] = s.lower_violations;
        d["bs_lower_violations"] = s.bs_lower_violations;
        d["max_abs_f"] = s.max_abs_f;
        return d;
      },
      py::arg("seed") = 1, py::arg("count") = 1000, py::arg("max_length") = 1000);

  m.def(
      "window_thresholds",
      [](double L, std::size_t d, double c1) {
        const auto w = window_thresholds(L, d, c1);
        return py::make_tuple(w.q, w.r);
      },
      py::arg("L"), py::arg("d"), py::arg("c1") = kDefaultC1);
  m.def(
      "solve",
      [](const std::string& problem_json, const SampledPath& path, bool direct) {
        const auto spec = parse_problem(problem_json, path.horizon());
        return solution_dict(direct ? solve_direct(spec.problem, path) : solve(spec.problem, path));
      },
      py::arg("problem_json"), py::arg("path"), py::arg("direct") = false,
      "Solve the equation described by a problem JSON string along `path`.");
  m.def(
      "black_scholes_exact",
      [](double x0, double sigma, double up, const SampledPath& path, int level) {
        const auto drift = DriftProcess::linear(up, 0.0, path.horizon(), up * path.horizon());
        const auto X = black_scholes_exact(x0, sigma, drift, path, qv_path(path, level));
        return py::make_tuple(to_vec(X.times()), X.values());
      },
      py::arg("x0"), py::arg("sigma"), py::arg("drift_rate"), py::arg("path"), py::arg("level"));
}
