#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sbbd/apps.hpp"
#include "sbbd/engine.hpp"
#include "sbbd/io.hpp"
#include "sbbd/saa_stats.hpp"

namespace py = pybind11;
using namespace sbbd;
using Json = nlohmann::ordered_json;

namespace {

AppParams parse_params(const std::string &params_json) {
    auto p = app_params_from_json(Json::parse(params_json));
    validate(p);
    return p;
}

SolveConfig parse_config(const std::string &method, double time_limit, double mrv, bool reduced) {
    SolveConfig cfg;
    cfg.method = method_from_string(method);
    cfg.time_limit = time_limit;
    cfg.mrv = mrv;
    cfg.reduced_model = reduced;
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_sbbd, m) {
    m.doc() = "Sample-average choice-based planning solvers";

    py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);
    py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

    py::class_<Instance>(m, "Instance")
        .def_property_readonly("n_options", &Instance::n_options)
        .def_property_readonly("n_scenarios", &Instance::n_scenarios)
        .def("to_json", [](const Instance &inst, bool compact) { return instance_to_json(inst, compact).dump(); },
             py::arg("compact") = false)
        .def_static("from_json", [](const std::string &text) { return instance_from_json(Json::parse(text)); })
        .def("is_feasible", [](const Instance &inst, const BinaryDecision &x) { return inst.space.is_feasible(x); })
        .def("__eq__", [](const Instance &a, const Instance &b) { return a == b; });

    m.def(
        "generate", [](const std::string &params_json) { return generate(parse_params(params_json)); },
        py::arg("params_json"));
    m.def(
        "default_params",
        [](const std::string &app) {
            AppParams p;
            if (app == "caop-exponomial") p = CaopExponomialParams{};
            else if (app == "caop-mmnl") p = CaopMmnlParams{};
            else if (app == "caop-probit") p = CaopProbitParams{};
            else if (app == "caop-kappa") p = CaopKappaParams{};
            else if (app == "flop") p = FlopParams{};
            else if (app == "msmflp") p = MsmflpParams{};
            else throw std::invalid_argument("unknown application " + app);
            return to_json(p).dump();
        },
        py::arg("app"));
    m.def(
        "solve",
        [](const Instance &inst, const std::string &method, double time_limit, double mrv, bool reduced,
           std::size_t cap) {
            auto cfg = parse_config(method, time_limit, mrv, reduced);
            cfg.extensive_cap = cap;
            Solution s;
            {
                py::gil_scoped_release release;
                s = solve(inst, cfg);
            }
            return to_json(s).dump();
        },
        py::arg("instance"), py::arg("method") = "sbbd", py::arg("time_limit") = 3600.0, py::arg("mrv") = 1e-5,
        py::arg("reduced") = false, py::arg("cap") = SolveConfig{}.extensive_cap);
    m.def(
        "sample_objective",
        [](const BinaryDecision &x, const Instance &inst) {
            if (!inst.space.is_feasible(x)) throw std::invalid_argument("x is not feasible");
            return sample_objective(x, inst);
        },
        py::arg("x"), py::arg("instance"));
    m.def(
        "cooperative_fraction",
        [](const BinaryDecision &x, const Instance &inst) { return cooperative_fraction(x, inst); }, py::arg("x"),
        py::arg("instance"));
    m.def(
        "enumerate_optimal",
        [](const Instance &inst) {
            const auto r = enumerate_optimal(inst);
            return py::make_tuple(r.x, r.value);
        },
        py::arg("instance"));
    m.def(
        "estimate_gap",
        [](const std::string &params_json, int replications, std::size_t n_prime, double alpha,
           std::uint64_t base_seed, std::uint64_t eval_seed, const std::string &method, double time_limit) {
            const auto p = parse_params(params_json);
            const auto cfg = parse_config(method, time_limit, 1e-5, false);
            GapReport report;
            {
                py::gil_scoped_release release;
                const auto reps = replicate_solve(p, n_scenarios(p), replications, base_seed, cfg);
                report = estimate_gap(reps, p, n_prime, alpha, eval_seed);
            }
            return to_json(report).dump();
        },
        py::arg("params_json"), py::arg("replications"), py::arg("n_prime"), py::arg("alpha") = 0.95,
        py::arg("base_seed") = 1, py::arg("eval_seed") = 1000003, py::arg("method") = "sbbd",
        py::arg("time_limit") = 3600.0);
    m.def("gap_percentages", &gap_percentages, py::arg("v_bar"), py::arg("v_hat"), py::arg("sigma"),
          py::arg("alpha"));
}
