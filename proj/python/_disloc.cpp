// Thin binding: configs and reports cross the boundary as JSON text, the
// wrapper package turns them into dicts.

#include "disloc/acceptance.hpp"
#include "disloc/cgo.hpp"

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace disloc;

namespace {

RunContext context(std::optional<std::uint64_t> seed, int threads, const std::string& thresholds) {
    RunContext ctx;
    ctx.seed = seed;
    ctx.threads = threads;
    if (!thresholds.empty()) {
        const json t = json::parse(thresholds);
        ctx.thresholds.override_from(ConfigNode(t, ""));
    }
    return ctx;
}

}  // namespace

PYBIND11_MODULE(_disloc, m) {
    m.doc() = "layered elastic dislocation lab";

    static py::exception<ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
    static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            const std::string msg = e.pointer().empty() ? e.what() : e.pointer() + ": " + e.what();
            py::set_error(validation_error, msg.c_str());
        } catch (const NumericalError& e) {
            py::set_error(numerical_error, e.what());
        }
    });

    m.def("experiment_kinds", &experiment_kinds);

    m.def(
        "run_experiment_json",
        [](const std::string& config, std::optional<std::uint64_t> seed, int threads, const std::string& thresholds) {
            json cfg;
            try {
                cfg = json::parse(config);
            } catch (const json::parse_error& e) {
                throw ValidationError(std::string("malformed JSON: ") + e.what());
            }
            const RunContext ctx = context(seed, threads, thresholds);
            ExperimentOutput out;
            {
                py::gil_scoped_release nogil;
                out = run_experiment(cfg, ctx);
            }
            json rep = out.report(seed.value_or(0));
            json tables = json::object();
            for (const auto& t : out.tables) tables[t.name] = format_csv(t);
            rep["csv"] = tables;
            return rep.dump();
        },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = 1, py::arg("thresholds") = "");

    m.def(
        "verify",
        [](std::vector<int> criteria, const std::string& thresholds, std::string config_dir) {
            const RunContext ctx = context(std::nullopt, 1, thresholds);
            if (config_dir.empty()) config_dir = bundled_config_dir().string();
            AcceptanceSummary s;
            {
                py::gil_scoped_release nogil;
                s = verify_all(config_dir, ctx, criteria);
            }
            py::list out;
            for (const auto& c : s.criteria) out.append(py::make_tuple(c.number, c.pass, c.summary_line()));
            return out;
        },
        py::arg("criteria") = std::vector<int>{}, py::arg("thresholds") = "", py::arg("config_dir") = "");

    m.def("thresholds_json", [] { return Thresholds::defaults().to_json().dump(); });

    m.def("edge_integral_exact", &edge_integral_exact, py::arg("s"), py::arg("h"), py::arg("theta"));
    m.def("sector_integral_exact", &sector_integral_exact, py::arg("theta_min"), py::arg("theta_max"), py::arg("s"),
          py::arg("power"));
    m.def("theta_matrix", [](double t) {
        const Mat2 T = theta_matrix(t);
        return std::vector<std::vector<double>>{{T(0, 0), T(0, 1)}, {T(1, 0), T(1, 1)}};
    });
    m.def(
        "elastic_cgo",
        [](double tau, std::pair<double, double> d, std::pair<double, double> xc, double omega, double lam, double mu,
           std::pair<double, double> x) {
            const ElasticCgo u(ElasticCgoParams::make(tau, Vec2(d.first, d.second), Vec2(xc.first, xc.second), omega,
                                                      LameParameters{lam, mu}));
            const CVec2 v = u.value(Vec2(x.first, x.second));
            const CVec2 r = lame_operator(u, Vec2(x.first, x.second), {lam, mu}) + omega * omega * v;
            return py::make_tuple(std::vector<Complex>{v(0), v(1)}, std::vector<Complex>{r(0), r(1)});
        },
        py::arg("tau"), py::arg("d"), py::arg("xc"), py::arg("omega"), py::arg("lam"), py::arg("mu"), py::arg("x"),
        "value and Lame residual (Lame u + omega^2 u) of the elastic CGO at x");
}
