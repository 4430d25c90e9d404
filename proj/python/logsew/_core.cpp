#include <pybind11/complex.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "logsew/scenario.hpp"
#include "logsew/series.hpp"
#include "logsew/transport.hpp"

namespace py = pybind11;
using namespace logsew;
using nlohmann::json;

namespace {

using RatPair = std::pair<std::string, std::string>;

RatPair parts(const ComplexRational& c) { return {c.re.get_str(), c.im.get_str()}; }

// (exponents, log powers, coefficient); exact coefficients as string pairs
py::list series_terms(const MultiLogSeries& s) {
    py::list out;
    for (const auto& [m, c] : s.terms()) {
        std::vector<RatPair> e;
        for (const auto& x : m.exps) e.push_back(parts(x));
        py::object coeff = c.is_exact() ? py::cast(parts(c.exact())) : py::cast(c.approx());
        out.append(py::make_tuple(e, m.logs, coeff));
    }
    return out;
}

std::vector<EvalPoint> eval_points(const std::vector<std::pair<double, double>>& pts) {
    std::vector<EvalPoint> r;
    for (const auto& [m, a] : pts) r.push_back({m, a});
    return r;
}

py::tuple run(const std::string& text, const std::string& fmt, std::optional<unsigned long> seed,
              std::optional<std::string> mode, const std::string& out_format) {
    RunOptions opt;
    opt.seed = seed;
    if (mode) {
        if (*mode != "exact" && *mode != "float") throw ScenarioError("mode must be exact or float");
        opt.mode = *mode == "float" ? Mode::Approx : Mode::Exact;
    }
    opt.format = out_format;
    RunReport r;
    {
        py::gil_scoped_release nogil;
        r = run_scenario(parse_scenario_text(text, fmt), opt);
    }
    py::dict arts;
    for (const auto& [k, v] : r.artifacts) arts[py::str(k)] = py::str(v);
    return py::make_tuple(r.summary().dump(), arts);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exact sewing, pseudo-traces and transport of conformal blocks";

    py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
    py::register_exception<ModeMismatch>(m, "ModeMismatch", PyExc_TypeError);
    py::register_exception<TruncationOverflow>(m, "TruncationOverflow", PyExc_ArithmeticError);
    py::register_exception<DomainEscape>(m, "DomainEscape", PyExc_ArithmeticError);
    py::register_exception<StepUnderflow>(m, "StepUnderflow", PyExc_ArithmeticError);

    py::class_<MultiLogSeries>(m, "Series")
        .def_static("from_json", [](const std::string& s) { return MultiLogSeries::from_json(json::parse(s)); })
        .def("to_json", [](const MultiLogSeries& s) { return s.to_json().dump(); })
        .def_property_readonly("num_vars", &MultiLogSeries::num_vars)
        .def_property_readonly("exact", [](const MultiLogSeries& s) { return s.mode() == Mode::Exact; })
        .def_property_readonly("max_log_power", &MultiLogSeries::max_log_power)
        .def_property_readonly("cutoff",
                               [](const MultiLogSeries& s) -> std::optional<std::string> {
                                   if (!s.cutoff()) return std::nullopt;
                                   return s.cutoff()->get_str();
                               })
        .def("terms", &series_terms)
        .def("to_float", [](const MultiLogSeries& s) { return s.to_mode(Mode::Approx); })
        .def("truncated", [](const MultiLogSeries& s, const std::string& c) {
            return s.truncated(parse_complex_rational(c).re);
        })
        .def("eval", [](const MultiLogSeries& s, const std::vector<std::pair<double, double>>& pts) {
            return s.eval(eval_points(pts));
        }, py::arg("points"))
        .def("__len__", [](const MultiLogSeries& s) { return s.terms().size(); })
        .def(py::self + py::self)
        .def(py::self - py::self)
        .def(py::self * py::self)
        .def(py::self == py::self);

    m.def("run_scenario", &run, py::arg("text"), py::arg("format") = "json", py::arg("seed") = py::none(),
          py::arg("mode") = py::none(), py::arg("out_format") = "csv");
    m.def("load_scenario", [](const std::string& path) { return load_scenario_file(path).dump(); });
    m.def("templates", [] {
        std::vector<std::map<std::string, std::string>> r;
        for (const auto& t : scenario_templates())
            r.push_back({{"name", t.name}, {"kind", t.kind}, {"format", t.format}, {"description", t.description},
                         {"text", t.text}});
        return r;
    });

    m.def("flow_integrate", [](const std::string& spec, std::complex<double> z, std::complex<double> q) {
        return flow_integrate(FlowSpec::from_json(json::parse(spec)), z, q);
    });
    m.def("deformed_circle", [](const std::string& spec, double r, std::complex<double> q, std::size_t n) {
        return deformed_circle(FlowSpec::from_json(json::parse(spec)), r, q, n);
    });
    m.def("winding_number", &winding_number, py::arg("curve"), py::arg("point"), py::arg("tol") = 1e-9);
}
