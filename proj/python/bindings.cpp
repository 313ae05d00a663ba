#include "uhdg/cli.hpp"
#include "uhdg/error.hpp"
#include "uhdg/verification.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace uhdg;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

template <class T>
py::object as_dict(const T& v)
{
    nlohmann::json j;
    to_json(j, v);
    return to_python(j);
}

Eigen::MatrixXd vertex_array(const Triangulation& m)
{
    Eigen::MatrixXd v(m.num_vertices(), 2);
    for (int i = 0; i < m.num_vertices(); ++i)
        v.row(i) = m.vertices()[static_cast<std::size_t>(i)].transpose();
    return v;
}

Eigen::MatrixXi element_array(const Triangulation& m)
{
    Eigen::MatrixXi e(m.num_elements(), 3);
    for (int t = 0; t < m.num_elements(); ++t)
        for (int i = 0; i < 3; ++i)
            e(t, i) = m.elements()[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
    return e;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Unfitted HDG solver for quasilinear elliptic problems on curved domains";

    py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<MaxItersExceeded>(m, "MaxItersExceeded");

    py::enum_<KappaVariant>(m, "KappaVariant")
        .value("OfU", KappaVariant::OfU)
        .value("OfGrad", KappaVariant::OfGrad);

    py::class_<DomainBoundary>(m, "DomainBoundary")
        .def_static("circle", [](double r, double cx, double cy) { return DomainBoundary::circle(r, Vec2(cx, cy)); },
                    py::arg("radius") = 1.0, py::arg("cx") = 0.0, py::arg("cy") = 0.0)
        .def_static("ellipse",
                    [](double a, double b, double cx, double cy) { return DomainBoundary::ellipse(a, b, Vec2(cx, cy)); },
                    py::arg("semi_x"), py::arg("semi_y"), py::arg("cx") = 0.0, py::arg("cy") = 0.0)
        .def_static("kite", &DomainBoundary::kite)
        .def_static("level_set",
                    [](const std::string& e, double cx, double cy) { return DomainBoundary::level_set(e, Vec2(cx, cy)); },
                    py::arg("expression"), py::arg("cx") = 0.0, py::arg("cy") = 0.0)
        .def_property_readonly("name", &DomainBoundary::name)
        .def("level", [](const DomainBoundary& b, double x, double y) { return b.level_eval(Vec2(x, y)); })
        .def("point", [](const DomainBoundary& b, double t) {
            const Vec2 p = b.param_eval(t);
            return py::make_tuple(p.x(), p.y());
        });

    py::class_<Triangulation>(m, "Triangulation")
        .def_property_readonly("vertices", &vertex_array)
        .def_property_readonly("elements", &element_array)
        .def_property_readonly("num_elements", &Triangulation::num_elements)
        .def_property_readonly("num_faces", &Triangulation::num_faces)
        .def_property_readonly("mesh_size", &Triangulation::mesh_size)
        .def_property_readonly("mean_diameter", &Triangulation::mean_diameter)
        .def_property_readonly("shape_regularity", &Triangulation::shape_regularity)
        .def_property_readonly("area", &Triangulation::area);

    m.def(
        "build_mesh",
        [](const DomainBoundary& b, double h, double gap_fraction) {
            MeshPolicy p;
            p.gap_fraction = gap_fraction;
            return build_admissible_mesh(b, h, p);
        },
        py::arg("boundary"), py::arg("h"), py::arg("gap_fraction") = 0.25);

    m.def(
        "check_admissibility",
        [](const Triangulation& mesh, const DomainBoundary& b, double lo, double hi, double tau_bar, int k) {
            return as_dict(check_admissibility(mesh, b, lo, hi, tau_bar, k));
        },
        py::arg("mesh"), py::arg("boundary"), py::arg("kappa_lo"), py::arg("kappa_hi"), py::arg("tau_bar"),
        py::arg("k"));

    py::class_<HdgSpace>(m, "HdgSpace")
        .def(py::init<const Triangulation&, const DomainBoundary&, int>(), py::arg("mesh"), py::arg("boundary"),
             py::arg("k"))
        .def_property_readonly("degree", &HdgSpace::degree)
        .def_property_readonly("num_trace_dofs", &HdgSpace::num_trace_dofs)
        .def_property_readonly("mesh", &HdgSpace::mesh, py::return_value_policy::reference_internal);

    py::class_<ProblemSpec>(m, "ProblemSpec")
        .def(py::init<KappaVariant, const std::string&, const std::string&, const std::string&, double, double, int>(),
             py::arg("variant"), py::arg("kappa"), py::arg("source"), py::arg("dirichlet"), py::arg("kappa_lo"),
             py::arg("kappa_hi"), py::arg("k"))
        .def_property_readonly("degree", &ProblemSpec::degree)
        .def_property_readonly("variant", &ProblemSpec::variant)
        .def("set_tau", &ProblemSpec::set_tau, py::arg("interior"), py::arg("boundary"));

    py::class_<ManufacturedCase>(m, "ManufacturedCase")
        .def("problem", &ManufacturedCase::problem, py::arg("k"), py::arg("kappa_lo"), py::arg("kappa_hi"))
        .def("u", [](const ManufacturedCase& c, double x, double y) { return c.u(Vec2(x, y)); })
        .def("fc", [](const ManufacturedCase& c, double x, double y) { return c.fc(Vec2(x, y)); })
        .def_property_readonly("source", [](const ManufacturedCase& c) { return c.source_expr().to_string(); });

    m.def("make_manufactured", &make_manufactured, py::arg("u"), py::arg("variant"), py::arg("kappa"),
          py::arg("f0") = "0");

    py::class_<DiscreteSolution>(m, "DiscreteSolution")
        .def_readonly("k", &DiscreteSolution::k)
        .def_readonly("q", &DiscreteSolution::q)
        .def_readonly("u", &DiscreteSolution::u)
        .def_readonly("uhat", &DiscreteSolution::uhat)
        .def_readonly("sigma", &DiscreteSolution::sigma)
        .def_property_readonly("has_sigma", &DiscreteSolution::has_sigma);

    m.def(
        "solve",
        [](const ProblemSpec& p, const HdgSpace& space, double tol, int max_iters, double relaxation) {
            PicardOptions o;
            o.tol = tol;
            o.max_iters = max_iters;
            o.relaxation = relaxation;
            PicardResult r = [&] {
                py::gil_scoped_release release;
                return solve_picard(p, space, o);
            }();
            return py::make_tuple(std::move(r.solution), as_dict(r.trace));
        },
        py::arg("problem"), py::arg("space"), py::arg("tol") = 1e-10, py::arg("max_iters") = 100,
        py::arg("relaxation") = 1.0);

    m.def(
        "compute_errors",
        [](const ManufacturedCase& mc, const ProblemSpec& p, const HdgSpace& space, const DiscreteSolution& sol) {
            return as_dict(compute_errors(mc, p, space, sol));
        },
        py::arg("case"), py::arg("problem"), py::arg("space"), py::arg("solution"));

    m.def(
        "eoc", [](const std::vector<double>& e, const std::vector<double>& h) { return eoc(e, h); }, py::arg("errors"),
        py::arg("h"));

    m.def(
        "run",
        [](const std::string& config_json, const std::optional<std::string>& out, bool strict, bool quiet) {
            RunOptions opts;
            opts.output_dir = out;
            opts.strict = strict;
            opts.quiet = quiet;
            std::ostringstream log;
            int code = 0;
            try {
                const RunConfig cfg = parse_config(nlohmann::json::parse(config_json));
                py::gil_scoped_release release;
                code = run(cfg, opts, log);
            } catch (const nlohmann::json::parse_error& e) {
                log << "config error: " << e.what() << '\n';
                code = kExitConfig;
            } catch (const ConfigError& e) {
                log << "config error: " << e.what() << '\n';
                code = kExitConfig;
            }
            return py::make_tuple(code, log.str());
        },
        py::arg("config"), py::arg("out") = py::none(), py::arg("strict") = false, py::arg("quiet") = true);

    m.def(
        "config_hash", [](const std::string& config_json) { return config_hash_hex(nlohmann::json::parse(config_json)); },
        py::arg("config"));
}
