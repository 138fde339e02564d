#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Core>

#include "pendsearch/analogies.hpp"
#include "pendsearch/dynamics.hpp"
#include "pendsearch/errors.hpp"
#include "pendsearch/scenario.hpp"
#include "pendsearch/spectral.hpp"

#ifndef PENDSEARCH_VERSION
#define PENDSEARCH_VERSION "0.0.0"
#endif

namespace pendsearch {

namespace {

using oj = nlohmann::ordered_json;

// Collects written files so a failed run can take them back.
class Artifacts {
public:
    explicit Artifacts(std::filesystem::path dir) : dir_(std::move(dir))
    {
        std::error_code ec;
        created_dir_ = !std::filesystem::exists(dir_, ec);
        std::filesystem::create_directories(dir_, ec);
        if (ec)
            throw ValidationError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body)
    {
        const std::filesystem::path path = dir_ / name;
        written_.push_back(path);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ValidationError("cannot write " + path.string());
        body(out);
        out.flush();
        if (!out)
            throw ValidationError("write failed for " + path.string());
    }

    void discard() noexcept
    {
        std::error_code ec;
        for (const auto& p : written_)
            std::filesystem::remove(p, ec);
        if (created_dir_ && std::filesystem::is_empty(dir_, ec))
            std::filesystem::remove(dir_, ec);
        written_.clear();
    }

    const std::vector<std::filesystem::path>& written() const noexcept { return written_; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
    bool created_dir_ = false;
};

std::ostream& precise(std::ostream& out)
{
    return out << std::setprecision(std::numeric_limits<double>::max_digits10);
}

oj channel_json(const ObservationChannel& ch)
{
    return {{"resolution", ch.resolution}, {"sample_interval", ch.sample_interval}, {"max_cycles", ch.max_cycles}};
}

oj design_json(const Ensemble& ensemble, const ResonanceDesign& d)
{
    return {{"support_mass", d.support_mass},
            {"support_stiffness", d.support_stiffness},
            {"support_length", ensemble.length_for_stiffness(d.support_stiffness)},
            {"branch", d.branch == Branch::upper ? "upper" : "lower"},
            {"detuning", d.detuning},
            {"tolerance", d.tolerance}};
}

std::size_t first_normal(const Ensemble& e)
{
    for (std::size_t j = 0; j < e.n(); ++j)
        if (!e.is_deviant(j))
            return j;
    throw ValidationError("no normal pendulum to probe");
}

DesignOptions design_options(const Scenario& s)
{
    return s.protocol_config().design;
}

oj run_simulate(const Scenario& s, Artifacts& files)
{
    Ensemble ens = build_ensemble(s);
    oj results;
    std::optional<double> beat;
    if (s.design_support) {
        const ResonanceDesign d = design_support(ens, s.support_mass, design_options(s));
        ens = apply_design(ens, d);
        results["design"] = design_json(ens, d);
        const ReducedModel red = build_reduced(ens);
        beat = 2.0 * predict_transfer_cycles(rotate(red), red.n, red.tau, d.branch);
        results["predicted_beat_cycles"] = *beat;
    }
    const ArrowSystem sys = build_full(ens);
    const double dt = s.simulate_dt.value_or(recommended_timestep(sys));
    const double period = deviant_period(sys);
    const double cycles = s.simulate_cycles.value_or(beat ? 1.5 * *beat : 200.0);
    const auto steps = static_cast<std::size_t>(std::ceil(cycles * period / dt));

    const Evolution evo = leapfrog_evolve(sys, push_support(sys, s.push_speed), dt, steps);
    files.write("trace.csv", [&](std::ostream& out) { write_csv(out, evo.trace); });

    const EnergyTrace& tr = evo.trace;
    const auto peak = std::max_element(tr.deviant.begin(), tr.deviant.end()) - tr.deviant.begin();
    results["deviant_indices"] = ens.deviant_indices();
    results["dt"] = dt;
    results["steps"] = steps;
    results["cycles"] = cycles;
    results["deviant_period"] = period;
    results["energy_drift"] = tr.max_relative_drift();
    if (tr.size() > 0 && tr.total.front() > 0.0) {
        results["peak_deviant_fraction"] = tr.deviant[peak] / tr.total.front();
        results["peak_time_cycles"] = tr.times[peak] / period;
    }
    return results;
}

oj run_design(const Scenario& s, Artifacts& files)
{
    const Ensemble ens = build_ensemble(s);
    const ResonanceDesign d = design_support(ens, s.support_mass, design_options(s));
    const Ensemble designed = apply_design(ens, d);
    const ReducedModel red = build_reduced(designed);
    const RotatedModel rot = rotate(red);
    const double transfer = predict_transfer_cycles(rot, red.n, red.tau, d.branch);

    files.write("design.csv", [&](std::ostream& out) {
        precise(out) << "support_mass,support_stiffness,support_length,branch,detuning,omega1_sq,omega2_sq,"
                        "omega_sq,alpha,beta,transfer_cycles\n";
        out << d.support_mass << ',' << d.support_stiffness << ',' << designed.support_length() << ','
            << (d.branch == Branch::upper ? "upper" : "lower") << ',' << d.detuning << ',' << rot.omega1_sq << ','
            << rot.omega2_sq << ',' << rot.omega_sq << ',' << rot.alpha << ',' << rot.beta << ',' << transfer << '\n';
    });

    oj results;
    results["deviant_indices"] = ens.deviant_indices();
    results["design"] = design_json(ens, d);
    results["omega1_sq"] = rot.omega1_sq;
    results["omega2_sq"] = rot.omega2_sq;
    results["omega_sq"] = rot.omega_sq;
    results["alpha"] = rot.alpha;
    results["beta"] = rot.beta;
    results["transfer_cycles"] = transfer;
    results["beat_cycles"] = 2.0 * transfer;
    return results;
}

oj run_presence(const Scenario& s, Artifacts& files)
{
    const Ensemble ens = build_ensemble(s);
    const ProtocolConfig config = s.protocol_config();
    const std::size_t probe = s.presence_probe.value_or(first_normal(ens));
    const SearchCalibration cal = calibrate_search(ens, probe, config);
    const PresenceVerdict v = presence_test(ens, probe, cal.channel, config);

    const std::vector<RoundRecord> rounds{{1, ens.n(), v.measured_period, v.ratio, v.present}};
    files.write("transcript.csv", [&](std::ostream& out) { write_transcript_csv(out, rounds); });

    oj results;
    results["deviant_indices"] = ens.deviant_indices();
    results["probe"] = probe;
    results["design"] = design_json(ens, cal.design);
    results["channel"] = channel_json(cal.channel);
    results["verdict"] = v.present ? "present" : "absent";
    results["measured_period"] = v.measured_period;
    results["expected_single"] = v.expected_single;
    results["expected_double"] = v.expected_double;
    results["ratio"] = v.ratio;
    results["threshold"] = presence_threshold();
    results["energy_drift"] = v.energy_drift;
    return results;
}

oj run_identify(const Scenario& s, Artifacts& files)
{
    const Ensemble ens = build_ensemble(s);
    IdentifyOptions opts;
    opts.protocol = s.protocol_config();
    opts.seed = s.seed;
    const IdentifyResult r = identify(ens, opts);
    files.write("transcript.csv", [&](std::ostream& out) { write_transcript_csv(out, r.rounds); });

    oj verdicts = oj::array();
    for (const RoundRecord& rec : r.rounds)
        verdicts.push_back(rec.present ? "present" : "absent");
    oj results;
    results["deviant_indices"] = ens.deviant_indices();
    results["identified_index"] = r.index;
    results["correct"] = ens.is_deviant(r.index);
    results["rounds"] = r.rounds.size();
    results["presence_tests"] = r.presence_tests;
    results["verdicts"] = verdicts;
    results["max_energy_drift"] = r.max_energy_drift;
    return results;
}

oj run_count(const Scenario& s, Artifacts& files)
{
    const Ensemble ens = build_ensemble(s);
    const ProtocolConfig config = s.protocol_config();
    const Ensemble reference = ens.with_deviants(fraction_placement(s.n, s.count_epsilon0, s.seed));
    const CountCalibration cal = calibrate_count(reference, config);
    const CountEstimate est = count_fraction(ens, cal, config);
    const double truth = static_cast<double>(ens.tau()) / static_cast<double>(ens.n());

    files.write("count.csv", [&](std::ostream& out) {
        precise(out) << "epsilon,epsilon_hat,measured_period,calibration_period\n";
        out << truth << ',' << est.epsilon_hat << ',' << est.measured_period << ',' << est.calibration_period
            << '\n';
    });

    oj results;
    results["deviant_indices"] = ens.deviant_indices();
    results["epsilon"] = truth;
    results["epsilon0"] = cal.epsilon0;
    results["epsilon_hat"] = est.epsilon_hat;
    results["relative_error"] = std::abs(est.epsilon_hat - truth) / truth;
    results["measured_period"] = est.measured_period;
    results["calibration_period"] = est.calibration_period;
    results["design"] = design_json(ens, cal.design);
    results["channel"] = channel_json(cal.channel);
    results["energy_drift"] = std::max(cal.energy_drift, est.energy_drift);
    return results;
}

oj run_route(const Scenario& s, Artifacts& files)
{
    const Ensemble ens = build_ensemble(s);
    RouteOptions opts;
    opts.protocol = s.protocol_config();
    opts.phase_scale = s.route_phase_scale;
    const RouteResult r = route_energy(ens, s.route_source, s.route_dest, opts);
    files.write("route.csv", [&](std::ostream& out) { write_route_csv(out, r); });

    oj results;
    results["deviant_indices"] = ens.deviant_indices();
    results["phase_duration"] = r.phase_duration;
    results["initial_source_energy"] = r.initial_source_energy;
    results["final_dest_energy"] = r.final_dest_energy;
    results["final_dest_fraction"] = r.final_dest_fraction;
    results["energy_drift"] = r.integrator_drift;
    results["switch_energy_change"] = r.trace.max_relative_drift();
    return results;
}

oj run_quantum(const Scenario& s, Artifacts& files)
{
    const QuantumSystem q(s.quantum_n, 0);
    const double root_n = std::sqrt(static_cast<double>(s.quantum_n));
    const double t_max = s.quantum_t_max.value_or(std::numbers::pi * root_n);
    const std::size_t count = s.quantum_samples;

    std::vector<double> t(count), full(count), two(count);
    std::size_t best = 0;
    double worst_gap = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        t[i] = t_max * static_cast<double>(i) / static_cast<double>(count - 1);
        full[i] = full_evolution(q, t[i]);
        two[i] = two_level_probability(s.quantum_n, t[i]);
        worst_gap = std::max(worst_gap, std::abs(full[i] - two[i]));
        if (full[i] > full[best])
            best = i;
    }
    files.write("quantum.csv", [&](std::ostream& out) {
        precise(out) << "t,P_full,P_two_level\n";
        for (std::size_t i = 0; i < count; ++i)
            out << t[i] << ',' << full[i] << ',' << two[i] << '\n';
    });

    // Parabola through the grid maximum and its neighbours.
    double peak_time = t[best];
    if (best > 0 && best + 1 < count) {
        const double denom = full[best - 1] - 2.0 * full[best] + full[best + 1];
        if (denom < 0.0)
            peak_time += 0.5 * (full[best - 1] - full[best + 1]) / denom * (t[1] - t[0]);
    }
    oj results;
    results["t_max"] = t_max;
    results["peak_time"] = peak_time;
    results["expected_peak_time"] = 0.5 * std::numbers::pi * root_n;
    results["peak_probability"] = full_evolution(q, peak_time);
    results["max_two_level_gap"] = worst_gap;
    return results;
}

oj run_collide(const Scenario& s, Artifacts& files)
{
    const std::vector<double> speeds = collision_speeds(s.collide_n);
    files.write("collide.csv", [&](std::ostream& out) {
        precise(out) << "collision,speed\n";
        for (std::size_t i = 0; i < speeds.size(); ++i)
            out << i + 1 << ',' << speeds[i] << '\n';
    });
    const double root_n = std::sqrt(static_cast<double>(s.collide_n));
    oj results;
    results["collisions"] = speeds.size();
    results["sqrt_n"] = root_n;
    results["ratio"] = static_cast<double>(speeds.size()) / root_n;
    return results;
}

oj run_sweep_kind(const Scenario& s, Artifacts& files)
{
    const SweepResult sweep = run_sweep(s);
    files.write("sweep.csv", [&](std::ostream& out) {
        precise(out) << sweep.variable << ",measured,predicted\n";
        for (const SweepRow& row : sweep.rows)
            out << row.x << ',' << row.measured << ',' << row.predicted << '\n';
    });
    oj results;
    results["variable"] = sweep.variable;
    results["slope"] = sweep.fit.slope;
    results["intercept"] = sweep.fit.intercept;
    results["stderr_slope"] = sweep.fit.stderr_slope;
    return results;
}

// One sweep point: returns (measured, predicted).
std::pair<double, double> sweep_point(const Scenario& s, double x, const CountCalibration* count_cal)
{
    const ProtocolConfig config = s.protocol_config();
    const auto as_count = [](double v) { return static_cast<std::size_t>(std::llround(v)); };

    if (s.sweep_variable == "n") {
        Scenario point = s;
        point.kind = ScenarioKind::presence;
        point.n = as_count(x);
        point.deviant_indices.reset();
        point.deviant_count = 1;
        const Ensemble ens = build_ensemble(point);
        const std::size_t probe = ens.deviant_indices().front();
        const SearchCalibration cal = calibrate_search(ens.with_deviants({}), probe, config);
        const BeatMeasurement beat =
            measure_beat(apply_design(ens, cal.design), probe, cal.channel, config.push_speed);
        return {beat.period_cycles, cal.expected_single};
    }
    if (s.sweep_variable == "epsilon") {
        const Ensemble ens = build_ensemble(s).with_deviants(fraction_placement(s.n, x, s.seed));
        const CountEstimate est = count_fraction(ens, *count_cal, config);
        const double eps = static_cast<double>(ens.tau()) / static_cast<double>(ens.n());
        return {est.measured_period, count_cal->period_cycles * std::sqrt(count_cal->epsilon0 / eps)};
    }
    if (s.sweep_variable == "quantum_n") {
        Scenario point = s;
        point.quantum_n = as_count(x);
        point.quantum_t_max.reset();
        const QuantumSystem q(point.quantum_n, 0);
        const double root_n = std::sqrt(x);
        const double t_max = std::numbers::pi * root_n;
        double best_t = 0.0, best_p = -1.0;
        for (std::size_t i = 0; i < point.quantum_samples; ++i) {
            const double t = t_max * static_cast<double>(i) / static_cast<double>(point.quantum_samples - 1);
            const double p = full_evolution(q, t);
            if (p > best_p) {
                best_p = p;
                best_t = t;
            }
        }
        return {best_t, 0.5 * std::numbers::pi * root_n};
    }
    return {static_cast<double>(collision_pump(as_count(x))), 0.5 * std::sqrt(x)};
}

} // namespace

SweepResult run_sweep(const Scenario& scenario)
{
    scenario.validate();
    if (scenario.kind != ScenarioKind::sweep)
        throw ValidationError("run_sweep needs a sweep scenario");

    std::optional<CountCalibration> count_cal;
    if (scenario.sweep_variable == "epsilon") {
        const Ensemble reference =
            build_ensemble(scenario).with_deviants(fraction_placement(scenario.n, scenario.count_epsilon0, scenario.seed));
        count_cal = calibrate_count(reference, scenario.protocol_config());
    }

    const std::vector<double>& xs = scenario.sweep_values;
    std::vector<SweepRow> rows(xs.size());
    std::vector<std::exception_ptr> errors(xs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < xs.size(); i = next++) {
            try {
                const auto [measured, predicted] = sweep_point(scenario, xs[i], count_cal ? &*count_cal : nullptr);
                rows[i] = {xs[i], measured, predicted};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(scenario.workers, xs.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < threads; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    // The measured period grows with the swept size, except for epsilon where
    // it shrinks.
    const bool decreasing = scenario.sweep_variable == "epsilon";
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const bool ok = decreasing ? rows[i].measured < rows[i - 1].measured
                                   : rows[i].measured >= rows[i - 1].measured;
        if (!ok) {
            std::ostringstream msg;
            msg << "sweep over " << scenario.sweep_variable << " is not monotone at " << rows[i - 1].x << " -> "
                << rows[i].x << " (" << rows[i - 1].measured << " -> " << rows[i].measured << ")";
            throw Inconsistent(msg.str());
        }
    }

    SweepResult result;
    result.variable = scenario.sweep_variable;
    result.rows = std::move(rows);
    std::vector<std::pair<double, double>> points;
    for (const SweepRow& r : result.rows)
        points.emplace_back(r.x, r.measured);
    result.fit = fit_powerlaw(points);
    return result;
}

RunOutcome run(const Scenario& scenario, const std::filesystem::path& out_dir)
{
    scenario.validate();
    const auto start = std::chrono::steady_clock::now();
    Artifacts files(out_dir);
    try {
        oj results;
        switch (scenario.kind) {
        case ScenarioKind::simulate: results = run_simulate(scenario, files); break;
        case ScenarioKind::design: results = run_design(scenario, files); break;
        case ScenarioKind::presence: results = run_presence(scenario, files); break;
        case ScenarioKind::identify: results = run_identify(scenario, files); break;
        case ScenarioKind::count: results = run_count(scenario, files); break;
        case ScenarioKind::route: results = run_route(scenario, files); break;
        case ScenarioKind::quantum: results = run_quantum(scenario, files); break;
        case ScenarioKind::collide: results = run_collide(scenario, files); break;
        case ScenarioKind::sweep: results = run_sweep_kind(scenario, files); break;
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        RunOutcome outcome;
        oj names = oj::array();
        for (const auto& p : files.written())
            names.push_back(p.filename().string());
        oj& m = outcome.manifest;
        m["kind"] = to_string(scenario.kind);
        m["scenario"] = scenario.to_json();
        m["results"] = std::move(results);
        m["artifacts"] = std::move(names);
        m["versions"] = {{"pendsearch", PENDSEARCH_VERSION},
                         {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                       "." + std::to_string(EIGEN_MINOR_VERSION)},
                         {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                               std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                         {"compiler", __VERSION__}};
        m["wall_time_s"] = wall;
        files.write("manifest.json", [&](std::ostream& out) { out << m.dump(2) << '\n'; });
        outcome.artifacts = files.written();
        return outcome;
    } catch (...) {
        files.discard();
        throw;
    }
}

} // namespace pendsearch
