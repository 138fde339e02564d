#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pendsearch/analogies.hpp"
#include "pendsearch/errors.hpp"
#include "pendsearch/powerlaw.hpp"
#include "pendsearch/protocol.hpp"
#include "pendsearch/scenario.hpp"
#include "pendsearch/spectral.hpp"

namespace py = pybind11;
using namespace pendsearch;

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Deviant-pendulum search on a shared support";

    static py::exception<Error> error(m, "Error");
    static py::exception<ValidationError> validation_error(m, "ValidationError", error.ptr());
    static py::exception<Error> physics_error(m, "PhysicsError", error.ptr());
    static py::exception<Error> inconclusive(m, "Inconclusive", error.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const Error& e) {
            switch (e.kind()) {
            case ErrorKind::validation: validation_error(e.what()); break;
            case ErrorKind::physics: physics_error(e.what()); break;
            case ErrorKind::inconclusive: inconclusive(e.what()); break;
            }
        }
    });

    py::class_<PendulumSpec>(m, "PendulumSpec")
        .def(py::init<double, double>(), py::arg("mass_scale"), py::arg("length"))
        .def_readonly("mass_scale", &PendulumSpec::mass_scale)
        .def_readonly("length", &PendulumSpec::length);

    py::class_<Ensemble>(m, "Ensemble")
        .def(py::init<std::size_t, PendulumSpec, PendulumSpec, std::vector<std::size_t>, double, double, double>(),
             py::arg("n"), py::arg("normal"), py::arg("deviant"), py::arg("deviant_indices"), py::arg("support_mass"),
             py::arg("support_length"), py::arg("gravity") = standard_gravity)
        .def_property_readonly("n", &Ensemble::n)
        .def_property_readonly("tau", &Ensemble::tau)
        .def_property_readonly("deviant_indices", &Ensemble::deviant_indices)
        .def_property_readonly("support_mass", &Ensemble::support_mass)
        .def_property_readonly("support_length", &Ensemble::support_length)
        .def("with_deviants", &Ensemble::with_deviants);

    py::enum_<Branch>(m, "Branch").value("upper", Branch::upper).value("lower", Branch::lower);

    py::class_<ResonanceDesign>(m, "ResonanceDesign")
        .def_readonly("support_mass", &ResonanceDesign::support_mass)
        .def_readonly("support_stiffness", &ResonanceDesign::support_stiffness)
        .def_readonly("branch", &ResonanceDesign::branch)
        .def_readonly("detuning", &ResonanceDesign::detuning);

    m.def(
        "design_support",
        [](const Ensemble& e, double support_mass, std::optional<Branch> branch, std::optional<double> gap_min) {
            return design_support(e, support_mass, DesignOptions{branch, gap_min});
        },
        py::arg("ensemble"), py::arg("support_mass"), py::arg("branch") = py::none(), py::arg("gap_min") = py::none());
    m.def("apply_design", &apply_design);
    m.def(
        "predicted_beat_cycles",
        [](const Ensemble& designed) {
            const ReducedModel red = build_reduced(designed);
            return 2.0 * predict_transfer_cycles(rotate(red), red.n, red.tau);
        },
        "Full-beat period of a designed ensemble, in deviant cycles.");

    py::class_<PresenceVerdict>(m, "PresenceVerdict")
        .def_readonly("present", &PresenceVerdict::present)
        .def_readonly("measured_period", &PresenceVerdict::measured_period)
        .def_readonly("expected_single", &PresenceVerdict::expected_single)
        .def_readonly("ratio", &PresenceVerdict::ratio)
        .def_readonly("energy_drift", &PresenceVerdict::energy_drift);
    m.def(
        "presence_test", [](const Ensemble& e, std::size_t probe) { return presence_test(e, probe); },
        py::arg("ensemble"), py::arg("probe"));

    py::class_<IdentifyResult>(m, "IdentifyResult")
        .def_readonly("index", &IdentifyResult::index)
        .def_readonly("presence_tests", &IdentifyResult::presence_tests)
        .def_readonly("max_energy_drift", &IdentifyResult::max_energy_drift)
        .def_property_readonly("verdicts", [](const IdentifyResult& r) {
            std::vector<bool> out;
            for (const RoundRecord& rec : r.rounds)
                out.push_back(rec.present);
            return out;
        });
    m.def(
        "identify",
        [](const Ensemble& e, std::uint64_t seed) {
            IdentifyOptions opts;
            opts.seed = seed;
            return identify(e, opts);
        },
        py::arg("ensemble"), py::arg("seed") = 0);

    m.def(
        "count_fraction",
        [](const Ensemble& e, double epsilon0, std::uint64_t seed) {
            const CountCalibration cal = calibrate_count(e.with_deviants(fraction_placement(e.n(), epsilon0, seed)));
            return count_fraction(e, cal).epsilon_hat;
        },
        py::arg("ensemble"), py::arg("epsilon0") = 0.01, py::arg("seed") = 0,
        "Estimated deviant fraction after calibrating at epsilon0.");
    m.def("fraction_placement", &fraction_placement, py::arg("n"), py::arg("epsilon"), py::arg("seed"));
    m.def(
        "route_energy",
        [](const Ensemble& e, std::size_t source, std::size_t dest) {
            return route_energy(e, source, dest).final_dest_fraction;
        },
        py::arg("ensemble"), py::arg("source"), py::arg("dest"),
        "Fraction of the source's initial energy found in the destination at the end.");

    m.def("two_level_probability", &two_level_probability, py::arg("n"), py::arg("t"));
    m.def(
        "full_evolution", [](std::size_t n, double t) { return full_evolution(QuantumSystem(n, 0), t); },
        py::arg("n"), py::arg("t"));
    m.def("collision_pump", &collision_pump, py::arg("n"));

    m.def(
        "fit_powerlaw",
        [](const std::vector<std::pair<double, double>>& rows) {
            const PowerLawFit f = fit_powerlaw(rows);
            return py::make_tuple(f.slope, f.intercept, f.stderr_slope);
        },
        py::arg("rows"), "Returns (slope, intercept, stderr_slope).");

    m.def(
        "run_scenario",
        [](const std::string& text, const std::filesystem::path& out_dir) {
            const Scenario s = parse_scenario(text);
            s.validate();
            return run(s, out_dir).manifest.dump();
        },
        py::arg("scenario_json"), py::arg("out_dir"), "Run a scenario; returns the manifest as JSON text.");
}
