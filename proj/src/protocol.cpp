#include "pendsearch/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "pendsearch/errors.hpp"

namespace pendsearch {

namespace {

std::vector<std::size_t> with_index(std::vector<std::size_t> indices, std::size_t extra)
{
    if (std::find(indices.begin(), indices.end(), extra) == indices.end())
        indices.push_back(extra);
    return indices;
}

// Fisher-Yates with a fixed engine so placements are identical across
// standard library implementations.
void seeded_shuffle(std::vector<std::size_t>& items, std::mt19937_64& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(items[i - 1], items[j]);
    }
}

double block_share(const RotatedModel& rot, Branch branch)
{
    const double c = std::cos(rot.mixing_angle);
    return branch == Branch::upper ? c * c : 1.0 - c * c;
}

struct DesignedPrediction {
    RotatedModel rot;
    Branch branch = Branch::upper;
    double beat_cycles = 0.0;
    double cycle_period = 0.0;
    double peak_amplitude = 0.0;
};

// Predicted beat and per-deviant peak amplitude for a designed ensemble whose
// deviant set is the assumed one.
DesignedPrediction predict(const Ensemble& designed, const ResonanceDesign& design, double push_speed)
{
    const ReducedModel red = build_reduced(designed);
    DesignedPrediction p;
    p.rot = rotate(red);
    p.branch = design.branch;
    p.beat_cycles = 2.0 * predict_transfer_cycles(p.rot, red.n, red.tau, design.branch);
    p.cycle_period = deviant_period(red);
    const double matched_energy =
        0.5 * design.support_mass * push_speed * push_speed * block_share(p.rot, design.branch);
    p.peak_amplitude = std::sqrt(2.0 * matched_energy / static_cast<double>(red.tau)) / std::sqrt(red.omega_sq);
    return p;
}

ObservationChannel channel_for(const DesignedPrediction& p, const ProtocolConfig& config)
{
    ObservationChannel ch;
    ch.resolution = config.resolution_fraction * p.peak_amplitude;
    ch.sample_interval = p.cycle_period / static_cast<double>(std::max<std::size_t>(4, config.samples_per_cycle));
    ch.max_cycles = config.budget_factor * p.beat_cycles;
    ch.resolution = config.resolution.value_or(ch.resolution);
    ch.sample_interval = config.sample_interval.value_or(ch.sample_interval);
    ch.max_cycles = config.max_cycles.value_or(ch.max_cycles);
    return ch;
}

// Raw probe readings never leave this function unquantized.
QuantizedSeries watch_probe(const Ensemble& designed, std::size_t probe_index, const ObservationChannel& channel,
                            double push_speed, double& drift)
{
    const ArrowSystem sys = build_full(designed);
    const double dt = recommended_timestep(sys);
    const double period = 2.0 * std::numbers::pi /
                          std::sqrt(sys.stiff_diag[probe_index + 1] / sys.masses[probe_index + 1]);
    const auto steps = static_cast<std::size_t>(std::ceil(channel.max_cycles * period / dt));

    LeapfrogOptions opts;
    opts.watch = {probe_index + 1};
    opts.watch_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(channel.sample_interval / dt)));
    const Evolution evo = leapfrog_evolve(sys, push_support(sys, push_speed), dt, steps, opts);
    drift = evo.trace.max_relative_drift();

    ProbeSeries raw;
    raw.cycle_period = period;
    raw.times = evo.watches.front().times;
    raw.amplitudes.reserve(raw.times.size());
    for (double x : evo.watches.front().displacements)
        raw.amplitudes.push_back(mass_weighted(sys, probe_index, x));
    return observe(raw, channel);
}

std::string verdict_word(bool present)
{
    return present ? "present" : "absent";
}

} // namespace

void ObservationChannel::validate() const
{
    std::ostringstream problems;
    if (!(resolution > 0.0) || !std::isfinite(resolution))
        problems << " resolution must be positive;";
    if (!(sample_interval > 0.0) || !std::isfinite(sample_interval))
        problems << " sample_interval must be positive;";
    if (!(max_cycles > 0.0) || !std::isfinite(max_cycles))
        problems << " max_cycles must be positive and finite;";
    if (!problems.str().empty())
        throw ValidationError("invalid observation channel:" + problems.str());
}

QuantizedSeries observe(const ProbeSeries& series, const ObservationChannel& channel)
{
    channel.validate();
    if (series.times.size() != series.amplitudes.size())
        throw ValidationError("probe series: times and amplitudes differ in length");
    QuantizedSeries out;
    out.resolution_ = channel.resolution;
    out.cycle_period_ = series.cycle_period;
    if (series.times.empty())
        return out;

    const double t0 = series.times.front();
    const double horizon = series.cycle_period > 0.0 ? channel.max_cycles * series.cycle_period
                                                     : std::numeric_limits<double>::infinity();
    // Small slack so samples that land on the grid are not skipped by rounding.
    const double slack = 1e-9 * channel.sample_interval;
    double next = t0;
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        const double t = series.times[i];
        if (t - t0 > horizon + slack)
            break;
        if (t + slack < next)
            continue;
        out.times_.push_back(t);
        out.values_.push_back(channel.resolution * std::round(series.amplitudes[i] / channel.resolution));
        next = t + channel.sample_interval;
    }
    return out;
}

QuantizedSeries observe(const QuantizedSeries& series, const ObservationChannel& channel)
{
    ProbeSeries raw;
    raw.times = series.times_;
    raw.amplitudes = series.values_;
    raw.cycle_period = series.cycle_period_;
    return observe(raw, channel);
}

EnvelopeEstimate envelope_period(const QuantizedSeries& samples)
{
    const double period = samples.cycle_period();
    if (!(period > 0.0))
        throw ValidationError("envelope_period: series has no cycle period");
    const auto& t = samples.times();
    const auto& v = samples.values();
    if (t.size() < 3)
        throw InsufficientSpan("envelope_period: fewer than three samples");

    // Envelope: largest |reading| in each half-cycle window.
    const double window = 0.5 * period;
    std::vector<double> env_t;
    std::vector<double> env_v;
    const double t0 = t.front();
    std::size_t i = 0;
    for (std::size_t w = 0;; ++w) {
        const double lo = t0 + static_cast<double>(w) * window;
        const double hi = lo + window;
        if (hi > t.back() + 1e-12 * window)
            break;
        double best = 0.0;
        bool any = false;
        for (; i < t.size() && t[i] < hi; ++i) {
            best = std::max(best, std::abs(v[i]));
            any = true;
        }
        if (any) {
            env_t.push_back(0.5 * (lo + hi));
            env_v.push_back(best);
        }
    }
    if (env_v.size() < 3)
        throw InsufficientSpan("envelope_period: observation shorter than two cycles");

    const auto [lo_it, hi_it] = std::minmax_element(env_v.begin(), env_v.end());
    const double range = *hi_it - *lo_it;
    const double delta = samples.resolution();
    if (range < 2.0 * delta) {
        std::ostringstream msg;
        msg << "no beat: envelope varies by " << range << " < 2x resolution " << delta;
        throw NoBeatDetected(msg.str());
    }

    // Hysteresis peak picking on the envelope.
    const double hysteresis = std::max(2.0 * delta, 0.3 * range);
    EnvelopeEstimate est;
    bool seeking_peak = true;
    double run_max = env_v[0];
    std::size_t first_at_max = 0, last_at_max = 0;
    double run_min = env_v[0];
    for (std::size_t k = 1; k < env_v.size(); ++k) {
        const double y = env_v[k];
        if (seeking_peak) {
            if (y > run_max) {
                run_max = y;
                first_at_max = last_at_max = k;
            } else if (y == run_max) {
                if (last_at_max + 1 == k)
                    last_at_max = k;
            } else if (y < run_max - hysteresis) {
                double tp;
                if (first_at_max == last_at_max && first_at_max > 0) {
                    const double ym = env_v[first_at_max - 1];
                    const double y0 = env_v[first_at_max];
                    const double yp = env_v[first_at_max + 1];
                    const double denom = ym - 2.0 * y0 + yp;
                    const double offset = denom != 0.0 ? 0.5 * (ym - yp) / denom : 0.0;
                    tp = env_t[first_at_max] + std::clamp(offset, -0.5, 0.5) * window;
                } else {
                    tp = 0.5 * (env_t[first_at_max] + env_t[last_at_max]);
                }
                // A maximum at the very first window is the start of the record, not a peak.
                if (first_at_max > 0)
                    est.peak_times.push_back(tp);
                seeking_peak = false;
                run_min = y;
            }
        } else {
            if (y < run_min) {
                run_min = y;
            } else if (y > run_min + hysteresis) {
                seeking_peak = true;
                run_max = y;
                first_at_max = last_at_max = k;
            }
        }
    }

    if (est.peak_times.size() < 2) {
        std::ostringstream msg;
        msg << "envelope shows " << est.peak_times.size() << " complete maxima; need two (extend the budget)";
        throw InsufficientSpan(msg.str());
    }
    const double span = est.peak_times.back() - est.peak_times.front();
    est.period_cycles = span / static_cast<double>(est.peak_times.size() - 1) / period;
    return est;
}

SearchCalibration calibrate_search(const Ensemble& hung, std::size_t probe_index, const ProtocolConfig& config)
{
    if (probe_index >= hung.n())
        throw ValidationError("probe index out of range");
    const Ensemble hypothesis = hung.with_deviants({probe_index});
    SearchCalibration cal;
    cal.design = design_support(hypothesis, hung.support_mass(), config.design);
    const DesignedPrediction p = predict(apply_design(hypothesis, cal.design), cal.design, config.push_speed);
    cal.expected_single = p.beat_cycles;
    cal.cycle_period = p.cycle_period;
    cal.predicted_peak_amplitude = p.peak_amplitude;
    cal.channel = channel_for(p, config);
    return cal;
}

BeatMeasurement measure_beat(const Ensemble& designed, std::size_t probe_index, const ObservationChannel& channel,
                             double push_speed)
{
    channel.validate();
    if (probe_index >= designed.n())
        throw ValidationError("probe index out of range");
    BeatMeasurement m;
    const QuantizedSeries seen = watch_probe(designed, probe_index, channel, push_speed, m.energy_drift);
    const EnvelopeEstimate env = envelope_period(seen);
    m.period_cycles = env.period_cycles;
    m.peak_times = env.peak_times;
    return m;
}

double presence_threshold()
{
    return std::pow(2.0, -0.25);
}

PresenceVerdict presence_test(const Ensemble& ensemble, std::size_t probe_index, const ObservationChannel& channel,
                              const ProtocolConfig& config)
{
    const SearchCalibration cal = calibrate_search(ensemble, probe_index, config);
    const Ensemble probed =
        apply_design(ensemble.with_deviants(with_index(ensemble.deviant_indices(), probe_index)), cal.design);
    const BeatMeasurement beat = measure_beat(probed, probe_index, channel, config.push_speed);

    PresenceVerdict verdict;
    verdict.measured_period = beat.period_cycles;
    verdict.expected_single = cal.expected_single;
    verdict.expected_double = cal.expected_single / std::sqrt(2.0);
    verdict.ratio = beat.period_cycles / cal.expected_single;
    verdict.present = verdict.ratio < presence_threshold();
    verdict.energy_drift = beat.energy_drift;
    return verdict;
}

PresenceVerdict presence_test(const Ensemble& ensemble, std::size_t probe_index, const ProtocolConfig& config)
{
    const SearchCalibration cal = calibrate_search(ensemble, probe_index, config);
    return presence_test(ensemble, probe_index, cal.channel, config);
}

IdentifyResult identify(const Ensemble& ensemble, const IdentifyOptions& options)
{
    const std::size_t n = ensemble.n();
    const std::size_t hung_count = n / 2 + 1;
    const double mass_ratio = static_cast<double>(hung_count) / static_cast<double>(n);

    // Hung pendulums keep their physical mass m/N and stiffness k/N.
    const PendulumSpec normal(ensemble.normal().mass_scale * mass_ratio, ensemble.normal().length);
    const PendulumSpec deviant(ensemble.deviant().mass_scale * mass_ratio, ensemble.deviant().length);
    const std::size_t probe_slot = hung_count - 1;
    const Ensemble layout(hung_count, normal, deviant, {}, ensemble.support_mass(), ensemble.support_length(),
                          ensemble.gravity());
    const SearchCalibration cal = calibrate_search(layout, probe_slot, options.protocol);

    IdentifyResult result;
    std::mt19937_64 rng(options.seed);

    // Runs one presence test on the given hung pendulums (original indices);
    // the last one is the shortened probe.
    auto run_test = [&](const std::vector<std::size_t>& hung) {
        std::vector<std::size_t> dev;
        for (std::size_t slot = 0; slot < hung.size(); ++slot)
            if (ensemble.is_deviant(hung[slot]))
                dev.push_back(slot);
        const Ensemble world = layout.with_deviants(std::move(dev));
        const PresenceVerdict v = presence_test(world, probe_slot, cal.channel, options.protocol);
        ++result.presence_tests;
        result.max_energy_drift = std::max(result.max_energy_drift, v.energy_drift);
        return v;
    };

    std::vector<std::size_t> candidates(n);
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    std::vector<std::size_t> known_normal;
    bool any_present = false;

    for (std::size_t round = 1; candidates.size() > 1; ++round) {
        if (options.seed != 0)
            seeded_shuffle(candidates, rng);
        const std::size_t half = candidates.size() / 2;
        std::vector<std::size_t> tested(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(half));
        std::vector<std::size_t> rest(candidates.begin() + static_cast<std::ptrdiff_t>(half), candidates.end());

        std::vector<std::size_t> hung = tested;
        const std::size_t padding = hung_count - 1 - hung.size();
        hung.insert(hung.end(), known_normal.begin(), known_normal.begin() + static_cast<std::ptrdiff_t>(padding));
        hung.push_back(rest.front());

        const PresenceVerdict v = run_test(hung);
        result.rounds.push_back({round, tested.size(), v.measured_period, v.ratio, v.present});
        any_present = any_present || v.present;

        std::sort(tested.begin(), tested.end());
        std::sort(rest.begin(), rest.end());
        if (v.present) {
            known_normal.insert(known_normal.end(), rest.begin(), rest.end());
            candidates = std::move(tested);
        } else {
            known_normal.insert(known_normal.end(), tested.begin(), tested.end());
            candidates = std::move(rest);
        }
    }

    // An all-absent transcript is also what an ensemble without any deviant
    // produces; one more test on the survivor tells the two apart.
    if (!any_present) {
        std::vector<std::size_t> hung{candidates.front()};
        hung.insert(hung.end(), known_normal.begin(),
                    known_normal.begin() + static_cast<std::ptrdiff_t>(hung_count - 2));
        hung.push_back(known_normal[hung_count - 2]);
        const PresenceVerdict v = run_test(hung);
        result.rounds.push_back({result.rounds.size() + 1, 1, v.measured_period, v.ratio, v.present});
        if (!v.present)
            throw Inconsistent("identify: no round found a short pendulum; the ensemble has none");
    }
    result.index = candidates.front();
    return result;
}

void write_transcript_csv(std::ostream& out, const std::vector<RoundRecord>& rounds)
{
    std::ostringstream buf;
    buf << std::setprecision(std::numeric_limits<double>::max_digits10);
    buf << "round,subset_size,period_cycles,ratio,verdict\n";
    for (const RoundRecord& r : rounds)
        buf << r.round << ',' << r.subset_size << ',' << r.period_cycles << ',' << r.ratio << ','
            << verdict_word(r.present) << '\n';
    out << buf.str();
}

std::vector<std::size_t> fraction_placement(std::size_t n, double epsilon, std::uint64_t seed)
{
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ValidationError("fraction must lie in (0, 1)");
    const auto tau = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(epsilon * static_cast<double>(n))));
    if (tau > n / 2)
        throw ValidationError("fraction above one half is not supported");
    std::vector<std::size_t> others(n - 1);
    std::iota(others.begin(), others.end(), std::size_t{1});
    std::mt19937_64 rng(seed);
    seeded_shuffle(others, rng);
    std::vector<std::size_t> placement{count_probe_index};
    placement.insert(placement.end(), others.begin(), others.begin() + static_cast<std::ptrdiff_t>(tau - 1));
    std::sort(placement.begin(), placement.end());
    return placement;
}

std::vector<std::size_t> random_placement(std::size_t n, std::size_t count, std::uint64_t seed)
{
    if (count > n)
        throw ValidationError("more deviants than pendulums");
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    seeded_shuffle(all, rng);
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
}

CountCalibration calibrate_count(const Ensemble& calibration_ensemble, const ProtocolConfig& config)
{
    const Ensemble probed = calibration_ensemble.with_deviants(
        with_index(calibration_ensemble.deviant_indices(), count_probe_index));
    CountCalibration cal;
    cal.design = design_support(probed, probed.support_mass(), config.design);
    const Ensemble designed = apply_design(probed, cal.design);
    cal.channel = channel_for(predict(designed, cal.design, config.push_speed), config);
    cal.epsilon0 = static_cast<double>(probed.tau()) / static_cast<double>(probed.n());
    const BeatMeasurement beat = measure_beat(designed, count_probe_index, cal.channel, config.push_speed);
    cal.period_cycles = beat.period_cycles;
    cal.energy_drift = beat.energy_drift;
    return cal;
}

CountEstimate count_fraction(const Ensemble& ensemble, const CountCalibration& calibration,
                             const ProtocolConfig& config)
{
    const Ensemble probed =
        apply_design(ensemble.with_deviants(with_index(ensemble.deviant_indices(), count_probe_index)),
                     calibration.design);
    const BeatMeasurement beat = measure_beat(probed, count_probe_index, calibration.channel, config.push_speed);
    CountEstimate est;
    est.measured_period = beat.period_cycles;
    est.calibration_period = calibration.period_cycles;
    est.energy_drift = beat.energy_drift;
    const double ratio = calibration.period_cycles / beat.period_cycles;
    est.epsilon_hat = calibration.epsilon0 * ratio * ratio;
    if (!(est.epsilon_hat > 0.0 && est.epsilon_hat < 1.0)) {
        std::ostringstream msg;
        msg << "count estimate " << est.epsilon_hat << " outside (0, 1)";
        throw Inconsistent(msg.str());
    }
    return est;
}

RouteResult route_energy(const Ensemble& ensemble, std::size_t source, std::size_t dest, const RouteOptions& options)
{
    if (source == dest)
        throw SameIndex("route_energy: source and destination are the same pendulum");
    if (source >= ensemble.n() || dest >= ensemble.n())
        throw ValidationError("route_energy: index out of range");
    if (ensemble.is_deviant(source) || ensemble.is_deviant(dest))
        throw ValidationError("route_energy: source and destination must start at normal length");
    if (!(options.phase_scale > 0.0))
        throw ValidationError("route_energy: phase_scale must be positive");

    const ProtocolConfig& config = options.protocol;
    const Ensemble phase1_hyp = ensemble.with_deviants(with_index(ensemble.deviant_indices(), source));
    const ResonanceDesign design = design_support(phase1_hyp, ensemble.support_mass(), config.design);
    const Ensemble phase1 = apply_design(phase1_hyp, design);
    const Ensemble phase2 =
        apply_design(ensemble.with_deviants(with_index(ensemble.deviant_indices(), dest)), design);

    const DesignedPrediction p = predict(phase1, design, config.push_speed);
    RouteResult out;
    out.phase_duration = options.phase_scale * 0.5 * p.beat_cycles * p.cycle_period;

    const ArrowSystem sys1 = build_full(phase1);
    const ArrowSystem sys2 = build_full(phase2);
    const double dt = std::min(recommended_timestep(sys1), recommended_timestep(sys2));
    const auto steps = static_cast<std::size_t>(std::llround(out.phase_duration / dt));
    const std::size_t stride =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(p.cycle_period / (8.0 * dt))));

    // Kick the source with the energy a support push of the same speed would carry.
    State start;
    start.displacements.assign(sys1.dof(), 0.0);
    start.velocities.assign(sys1.dof(), 0.0);
    start.velocities[source + 1] =
        config.push_speed * std::sqrt(design.support_mass / sys1.masses[source + 1]);
    out.initial_source_energy = pendulum_energy(sys1, start, source);

    auto sample = [&](const ArrowSystem& sys, const State& s) {
        const GroupEnergies g = energy_accounting(sys, s);
        const double es = pendulum_energy(sys, s, source);
        const double ed = pendulum_energy(sys, s, dest);
        out.times.push_back(s.time);
        out.source_energy.push_back(es);
        out.dest_energy.push_back(ed);
        out.support_energy.push_back(g.support);
        out.other_energy.push_back(g.total - g.support - es - ed);
        out.total_energy.push_back(g.total);
        out.trace.append(s.time, g);
    };

    LeapfrogOptions opts;
    opts.sample_every = stride;
    opts.snapshot_every = stride;

    const Evolution first = leapfrog_evolve(sys1, start, dt, steps, opts);
    for (const State& s : first.snapshots)
        sample(sys1, s);
    const Evolution second = leapfrog_evolve(sys2, first.final_state, dt, steps, opts);
    for (std::size_t i = 0; i < second.snapshots.size(); ++i)
        if (i > 0 || first.snapshots.empty() || second.snapshots[i].time > first.snapshots.back().time)
            sample(sys2, second.snapshots[i]);
    if (out.times.empty() || out.times.back() < second.final_state.time)
        sample(sys2, second.final_state);

    out.integrator_drift = std::max(first.trace.max_relative_drift(), second.trace.max_relative_drift());
    out.final_dest_energy = pendulum_energy(sys2, second.final_state, dest);
    out.final_dest_fraction = out.final_dest_energy / out.initial_source_energy;
    return out;
}

void write_route_csv(std::ostream& out, const RouteResult& route)
{
    std::ostringstream buf;
    buf << std::setprecision(std::numeric_limits<double>::max_digits10);
    buf << "t,E_source,E_dest,E_support,E_other,E_total\n";
    for (std::size_t i = 0; i < route.times.size(); ++i)
        buf << route.times[i] << ',' << route.source_energy[i] << ',' << route.dest_energy[i] << ','
            << route.support_energy[i] << ',' << route.other_energy[i] << ',' << route.total_energy[i] << '\n';
    out << buf.str();
}

} // namespace pendsearch
