#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wavelab/analysis.hpp"
#include "wavelab/cli.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/floquet.hpp"
#include "wavelab/rays.hpp"

namespace py = pybind11;
using namespace wavelab;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

std::vector<double> from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a)
{
    return {a.data(), a.data() + a.size()};
}

AdmissibilityRule rule_of(const std::string& name)
{
    if (name == "free") return AdmissibilityRule::free_1_3;
    if (name == "perturbed") return AdmissibilityRule::perturbed_1_4;
    if (name == "local") return AdmissibilityRule::local_5_1;
    throw ParameterError("rule must be free, perturbed or local");
}

} // namespace

PYBIND11_MODULE(_wavelab, m)
{
    m.doc() = "Wave equations with time-periodic sound speed";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());

    py::class_<Metric>(m, "Metric")
        .def("__call__", [](const Metric& a, double t, std::vector<double> x) { return a.evaluate(t, x); })
        .def_property_readonly("period", &Metric::period)
        .def_property_readonly("rho", &Metric::support_radius)
        .def_property_readonly("lower_bound", &Metric::lower_bound)
        .def_property_readonly("upper_bound", &Metric::upper_bound)
        .def_property_readonly("label", &Metric::label);

    m.def("flat_metric", &flat_metric, py::arg("rho") = 1.0, py::arg("period") = 1.0);
    m.def(
        "radial_bump",
        [](double epsilon, double rho, double period, const std::vector<std::pair<double, int>>& harmonics) {
            std::vector<Harmonic> h;
            for (const auto& [a, k] : harmonics) h.push_back({a, k});
            return build_radial_bump(epsilon, rho, period, h);
        },
        py::arg("epsilon"), py::arg("rho"), py::arg("period"), py::arg("harmonics") = std::vector<std::pair<double, int>>{});
    m.def("frozen_tail", &build_frozen_tail, py::arg("base"), py::arg("t_freeze"), py::arg("period"));

    m.def(
        "check_conditions",
        [](const Metric& metric, int t_points, int x_points) {
            SampleGrid g{3, t_points, x_points, 0.0};
            auto reports = check_basic_conditions(metric, g);
            reports.push_back(check_nontrapping_sufficient(metric, g));
            py::list out;
            for (const auto& r : reports) {
                py::dict d;
                d["id"] = to_string(r.id);
                d["margin"] = r.margin;
                d["passed"] = r.passed;
                out.append(d);
            }
            return out;
        },
        py::arg("metric"), py::arg("t_points") = 16, py::arg("x_points") = 24);

    m.def(
        "trace_ray",
        [](const Metric& metric, double t0, std::vector<double> x, std::vector<double> xi, int branch, double t_final,
           double escape_radius) {
            RayOptions o;
            o.escape_radius = escape_radius;
            const auto traj = integrate_ray(metric, on_shell_point(metric, t0, x, xi, branch), t_final, 1e-10, o);
            std::vector<double> t, pos;
            for (const auto& s : traj.samples) {
                t.push_back(s.t);
                pos.insert(pos.end(), s.x.begin(), s.x.end());
            }
            py::dict d;
            d["t"] = to_array(t);
            d["x"] = to_array(pos).reshape({static_cast<py::ssize_t>(t.size()), static_cast<py::ssize_t>(x.size())});
            d["hamiltonian_residual"] = traj.hamiltonian_residual_max;
            d["escape_time"] = traj.escape_time ? py::cast(*traj.escape_time) : py::object(py::none());
            return d;
        },
        py::arg("metric"), py::arg("t0"), py::arg("x"), py::arg("xi"), py::arg("branch") = 1, py::arg("t_final"),
        py::arg("escape_radius") = 0.0);

    py::class_<Grid>(m, "Grid")
        .def_static("cartesian", &Grid::cartesian, py::arg("n"), py::arg("extent"), py::arg("points"))
        .def_static("radial", &Grid::radial_grid, py::arg("n"), py::arg("extent"), py::arg("points"))
        .def_readonly("dimension", &Grid::dimension)
        .def_readonly("is_radial", &Grid::radial)
        .def_readonly("extent", &Grid::extent)
        .def_readonly("points", &Grid::points)
        .def_property_readonly("h", &Grid::h)
        .def("__len__", &Grid::size);

    py::class_<CauchyData>(m, "CauchyData")
        .def(py::init([](const Grid& g, py::array_t<double> f1, py::array_t<double> f2, double time) {
                 CauchyData d{g, from_array(f1), from_array(f2), time, std::nullopt};
                 if (d.f1.size() != g.size() || d.f2.size() != g.size())
                     throw ParameterError("field sizes must match the grid");
                 return d;
             }),
             py::arg("grid"), py::arg("f1"), py::arg("f2"), py::arg("time") = 0.0)
        .def_readonly("grid", &CauchyData::grid)
        .def_readonly("time", &CauchyData::time)
        .def_property_readonly("f1", [](const CauchyData& d) { return to_array(d.f1); })
        .def_property_readonly("f2", [](const CauchyData& d) { return to_array(d.f2); });

    m.def("random_data", &sample_random_data, py::arg("seed"), py::arg("support"), py::arg("smoothness"),
          py::arg("grid"));
    m.def(
        "evolve",
        [](const Metric& metric, const CauchyData& data, double t) {
            py::gil_scoped_release release;
            return evolve(metric, data, data.time, t);
        },
        py::arg("metric"), py::arg("data"), py::arg("t"));
    m.def("energy_norm", &hdot_norm, py::arg("data"));

    m.def(
        "spectral_radius",
        [](const Metric& metric, const Grid& grid, int periods) {
            py::gil_scoped_release release;
            return estimate_spectrum(CutoffMonodromy::make(metric, grid, periods), 1).spectral_radius_estimate;
        },
        py::arg("metric"), py::arg("grid"), py::arg("periods") = 0);

    m.def(
        "check_admissibility",
        [](const std::string& p, const std::string& q, const std::string& gamma, int n, const std::string& rule) {
            const StrichartzTriple t{Exponent::parse(p), Exponent::parse(q), Exponent::parse(gamma), n};
            const auto v = check_admissibility(t, rule_of(rule));
            return py::make_tuple(v.passed, v.binding_constraint);
        },
        py::arg("p"), py::arg("q"), py::arg("gamma"), py::arg("n") = 3, py::arg("rule") = "perturbed");

    m.def("experiment_names", &experiment_names);
    m.def(
        "validate_config",
        [](const std::string& text, const std::vector<std::string>& overrides, const std::string& experiment) {
            const auto r = validate(text, overrides, experiment);
            return py::make_tuple(r.config ? py::cast(r.config->resolved.dump()) : py::object(py::none()), r.errors);
        },
        py::arg("text"), py::arg("overrides") = std::vector<std::string>{}, py::arg("experiment") = "");
    m.def(
        "run_experiment",
        [](const std::string& text, const std::string& out_dir, const std::vector<std::string>& overrides,
           const std::string& experiment) {
            const auto cfg = validate_or_throw(text, overrides, experiment);
            py::gil_scoped_release release;
            return manifest_json(run(cfg, out_dir));
        },
        py::arg("text"), py::arg("out_dir"), py::arg("overrides") = std::vector<std::string>{},
        py::arg("experiment") = "");
}
