#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "skewsim/cli.hpp"
#include "skewsim/engine.hpp"
#include "skewsim/error.hpp"
#include "skewsim/rng.hpp"
#include "skewsim/transform.hpp"

namespace py = pybind11;
using skewsim::Json;

namespace {

Json parse(const std::string& text) { return Json::parse(text); }

py::array_t<double> simulate(const std::string& spec, const std::string& measure, double x0, double horizon,
                             int steps, int paths, std::uint64_t seed, const std::string& scheme, int threads) {
    auto s = skewsim::DiffusionSpec::from_json(parse(spec));
    auto nu = skewsim::SignedMeasure::from_json(parse(measure));
    skewsim::TimeGrid grid(horizon, steps);
    skewsim::SchemeOptions options;
    options.threads = threads;
    auto driver = skewsim::sample_driver(seed, paths, grid);
    skewsim::PathSet ps;
    {
        py::gil_scoped_release release;
        auto sch = skewsim::make_scheme(scheme, s, nu, grid, options);
        ps = skewsim::simulate(*sch, x0, driver, threads, s.hash());
    }
    py::array_t<double> out({paths, steps + 1});
    std::copy(ps.values.begin(), ps.values.end(), out.mutable_data());
    return out;
}

py::tuple run(const std::string& config, const std::string& out) {
    Json doc = parse(config);
    auto c = skewsim::parse_config(doc);
    skewsim::RunResult result;
    {
        py::gil_scoped_release release;
        result = skewsim::run_experiment(c);
        if (!out.empty()) skewsim::write_outputs(c, result, out);
    }
    return py::make_tuple(skewsim::exit_status(result), result.report.to_json().dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "skewsim core: transforms, path simulation and experiments";
    m.attr("__version__") = skewsim::version_string;

    // translators run newest first, so the base class goes in first
    auto base = py::register_exception<skewsim::Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<skewsim::ConditionError>(m, "ConditionError", base.ptr());
    py::register_exception<skewsim::ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<skewsim::RangeError>(m, "RangeError", base.ptr());

    py::class_<skewsim::ZvonkinTransform, std::shared_ptr<skewsim::ZvonkinTransform>>(m, "Transform")
        .def(py::init([](const std::string& measure, double x_min, double x_max, int resolution) {
                 return std::make_shared<skewsim::ZvonkinTransform>(skewsim::build_transform(
                     skewsim::SignedMeasure::from_json(parse(measure)), x_min, x_max, resolution));
             }),
             py::arg("measure"), py::arg("x_min"), py::arg("x_max"), py::arg("resolution") = 4096)
        .def("F", [](const skewsim::ZvonkinTransform& t, py::array_t<double> x) {
                 return py::vectorize([&t](double v) { return t.F(v); })(x);
             })
        .def("F_inverse", [](const skewsim::ZvonkinTransform& t, py::array_t<double> x) {
                 return py::vectorize([&t](double v) { return t.F_inverse(v); })(x);
             })
        .def("f", [](const skewsim::ZvonkinTransform& t, py::array_t<double> x) {
                 return py::vectorize([&t](double v) { return t.f(v); })(x);
             })
        .def_property_readonly("m_lower", &skewsim::ZvonkinTransform::m_lower)
        .def_property_readonly("m_upper", &skewsim::ZvonkinTransform::m_upper)
        .def_property_readonly("knots", &skewsim::ZvonkinTransform::knots)
        .def("to_csv", &skewsim::ZvonkinTransform::to_csv);

    m.def("simulate", &simulate, py::arg("spec"), py::arg("measure"), py::arg("x0"), py::arg("horizon"),
          py::arg("steps"), py::arg("paths"), py::arg("seed") = 1, py::arg("scheme") = "transform",
          py::arg("threads") = 1, "Paths as a (paths, steps + 1) array; spec and measure are JSON text.");

    m.def("run", &run, py::arg("config"), py::arg("out") = "",
          "Runs a JSON config; returns (exit status, report JSON). Writes outputs when out is given.");

    m.def("config_schema", [] { return skewsim::config_schema().dump(); });

    m.def("list_experiments", [] {
        py::list rows;
        for (const auto& e : skewsim::list_experiments()) {
            py::dict d;
            d["name"] = e.name;
            d["required"] = e.required;
            d["exercises"] = e.exercises;
            rows.append(d);
        }
        return rows;
    });

    m.def("philox", [](std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
        return skewsim::Philox4x32::block(ctr, key);
    });
}
