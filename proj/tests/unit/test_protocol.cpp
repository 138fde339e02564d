#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "pendsearch/errors.hpp"
#include "pendsearch/protocol.hpp"

using namespace pendsearch;

namespace {

Ensemble world(std::size_t n, std::vector<std::size_t> dev)
{
    return Ensemble(n, PendulumSpec(1.0, 1.0), PendulumSpec(1.0, 0.5), std::move(dev), 16.0, 1.0);
}

ProbeSeries synthetic(double (*f)(double), double t_end, double dt)
{
    ProbeSeries s;
    s.cycle_period = 2.0 * M_PI;
    for (double t = 0.0; t <= t_end; t += dt) {
        s.times.push_back(t);
        s.amplitudes.push_back(f(t));
    }
    return s;
}

ObservationChannel channel(double resolution, double interval, double cycles)
{
    ObservationChannel c;
    c.resolution = resolution;
    c.sample_interval = interval;
    c.max_cycles = cycles;
    return c;
}

} // namespace

TEST_CASE("channel validation names each bad setting")
{
    try {
        channel(0.0, -1.0, std::numeric_limits<double>::infinity()).validate();
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("resolution") != std::string::npos);
        CHECK(msg.find("sample_interval") != std::string::npos);
        CHECK(msg.find("max_cycles") != std::string::npos);
    }
}

TEST_CASE("observation quantizes, decimates and truncates")
{
    const ProbeSeries raw = synthetic([](double t) { return std::sin(t); }, 200.0, 0.01);
    const ObservationChannel ch = channel(0.1, 0.2, 10.0);
    const QuantizedSeries q = observe(raw, ch);
    for (double v : q.values())
        CHECK(std::abs(v / 0.1 - std::round(v / 0.1)) < 1e-9);
    CHECK(q.times().back() <= 10.0 * 2.0 * M_PI + 1e-9);
    for (std::size_t i = 1; i < q.size(); ++i)
        CHECK(q.times()[i] - q.times()[i - 1] >= 0.2 - 1e-9);
    CHECK(q.resolution() == 0.1);
}

TEST_CASE("observation is idempotent")
{
    const ProbeSeries raw = synthetic([](double t) { return 0.7 * std::sin(1.3 * t) * std::cos(0.01 * t); }, 500.0, 0.05);
    const ObservationChannel ch = channel(0.013, 0.15, 60.0);
    const QuantizedSeries once = observe(raw, ch);
    const QuantizedSeries twice = observe(once, ch);
    CHECK(once.values() == twice.values());
    CHECK(once.times() == twice.times());
}

TEST_CASE("envelope of sin(t) sin(0.05 t) repeats every 10 cycles")
{
    const ProbeSeries raw = synthetic([](double t) { return std::sin(t) * std::sin(0.05 * t); }, 700.0, 2.0 * M_PI / 64.0);
    const EnvelopeEstimate est = envelope_period(observe(raw, channel(0.001, 2.0 * M_PI / 32.0, 100.0)));
    CHECK(est.period_cycles == doctest::Approx(10.0).epsilon(0.02));
    CHECK(est.peak_times.size() >= 5);
}

TEST_CASE("flat or short records are inconclusive")
{
    const ProbeSeries flat = synthetic([](double t) { return std::sin(t); }, 400.0, 0.05);
    CHECK_THROWS_AS(envelope_period(observe(flat, channel(0.01, 0.2, 60.0))), NoBeatDetected);

    const ProbeSeries slow = synthetic([](double t) { return std::sin(t) * std::sin(0.05 * t); }, 400.0, 0.05);
    try {
        envelope_period(observe(slow, channel(0.001, 0.2, 12.0)));
        FAIL("expected InsufficientSpan");
    } catch (const InsufficientSpan& e) {
        CHECK(e.kind() == ErrorKind::inconclusive);
    }
}

TEST_CASE("presence test separates one short pendulum from two")
{
    const Ensemble none = world(64, {});
    const PresenceVerdict single = presence_test(none, 10);
    CHECK_FALSE(single.present);
    CHECK(single.ratio == doctest::Approx(1.0).epsilon(0.05));

    const PresenceVerdict pair = presence_test(world(64, {40}), 10);
    CHECK(pair.present);
    CHECK(pair.ratio == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.05));
    CHECK(pair.energy_drift < 1e-6);
    CHECK(presence_threshold() == doctest::Approx(std::pow(2.0, -0.25)));
}

TEST_CASE("identify finds the deviant in log2 N tests")
{
    for (std::uint64_t seed : {0u, 1u, 9u}) {
        for (std::size_t truth : {0u, 37u, 63u}) {
            IdentifyOptions opts;
            opts.seed = seed;
            const IdentifyResult r = identify(world(64, {truth}), opts);
            CHECK(r.index == truth);
            // One confirmation test is added only when every round read absent.
            const bool all_absent = std::none_of(r.rounds.begin(), r.rounds.begin() + 6,
                                                 [](const RoundRecord& rec) { return rec.present; });
            CHECK(r.presence_tests == (all_absent ? 7u : 6u));
            CHECK(r.rounds.size() == r.presence_tests);
            CHECK(r.max_energy_drift < 1e-6);
        }
    }
}

TEST_CASE("identify on N=8 finds every placement")
{
    for (std::size_t truth = 0; truth < 8; ++truth) {
        const IdentifyResult r = identify(Ensemble(8, PendulumSpec(1.0, 1.0), PendulumSpec(1.0, 0.5), {truth}, 64.0, 1.0),
                                          IdentifyOptions{{.design = {std::nullopt, 0.0}}, 0});
        CHECK(r.index == truth);
        CHECK(r.rounds.size() >= 3);
    }
}

TEST_CASE("identify reports an ensemble without deviants")
{
    CHECK_THROWS_AS(identify(world(64, {})), Inconsistent);
}

TEST_CASE("transcript CSV layout")
{
    std::ostringstream out;
    write_transcript_csv(out, {{1, 32, 46.5, 0.7, true}, {2, 16, 64.0, 0.99, false}});
    CHECK(out.str() == "round,subset_size,period_cycles,ratio,verdict\n1,32,46.5,0.69999999999999996,present\n"
                       "2,16,64,0.98999999999999999,absent\n");
}

TEST_CASE("placements are seeded, sorted and sized")
{
    const auto a = fraction_placement(2500, 0.04, 3);
    CHECK(a.size() == 100);
    CHECK(a.front() == count_probe_index);
    CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == a.size());
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(a == fraction_placement(2500, 0.04, 3));
    CHECK(a != fraction_placement(2500, 0.04, 4));
    CHECK_THROWS_AS(fraction_placement(100, 0.0, 1), ValidationError);
    CHECK_THROWS_AS(fraction_placement(100, 0.7, 1), ValidationError);

    const auto b = random_placement(50, 5, 8);
    CHECK(b.size() == 5);
    CHECK(std::is_sorted(b.begin(), b.end()));
    CHECK(b.back() < 50);
}

TEST_CASE("counting recovers the short fraction after calibration")
{
    const std::size_t n = 400;
    const CountCalibration cal = calibrate_count(world(n, fraction_placement(n, 0.01, 2)));
    CHECK(cal.epsilon0 == doctest::Approx(0.01));
    for (double eps : {0.02, 0.05}) {
        const CountEstimate est = count_fraction(world(n, fraction_placement(n, eps, 5)), cal);
        CHECK(est.epsilon_hat == doctest::Approx(eps).epsilon(0.15));
    }
}

TEST_CASE("routing moves the source energy to the destination")
{
    const RouteResult r = route_energy(world(64, {}), 3, 50);
    CHECK(r.final_dest_fraction > 0.9);
    CHECK(r.integrator_drift < 1e-6);
    CHECK(r.source_energy.front() == doctest::Approx(r.initial_source_energy));
    CHECK(std::is_sorted(r.times.begin(), r.times.end()));

    std::ostringstream csv;
    write_route_csv(csv, r);
    CHECK(csv.str().rfind("t,E_source,E_dest,E_support,E_other,E_total\n", 0) == 0);

    CHECK_THROWS_AS(route_energy(world(64, {}), 3, 3), SameIndex);
    CHECK_THROWS_AS(route_energy(world(64, {3}), 3, 4), ValidationError);
}

TEST_CASE("quantization rounds to the nearest step")
{
    ProbeSeries s;
    s.cycle_period = 1.0;
    s.times = {0.0, 1.0};
    s.amplitudes = {0.26, -0.26};
    const QuantizedSeries q = observe(s, channel(0.1, 0.5, 10.0));
    CHECK(q.values()[0] == doctest::Approx(0.3));
    CHECK(q.values()[1] == doctest::Approx(-0.3));
}

TEST_CASE("a resolution coarser than the signal hides the beat")
{
    const ProbeSeries raw = synthetic([](double t) { return 0.4 * std::sin(t) * std::sin(0.05 * t); }, 700.0, 0.05);
    const QuantizedSeries q = observe(raw, channel(1.0, 0.1, 100.0));
    for (double v : q.values())
        CHECK(v == 0.0);
    CHECK_THROWS_AS(envelope_period(q), NoBeatDetected);
}

TEST_CASE("measured beat matches twice the predicted transfer at N=256")
{
    const Ensemble e = world(256, {100});
    const SearchCalibration cal = calibrate_search(e, 100);
    const BeatMeasurement beat = measure_beat(apply_design(e, cal.design), 100, cal.channel);
    CHECK(beat.period_cycles == doctest::Approx(cal.expected_single).epsilon(0.10));
}

TEST_CASE("normal pendulums fall below a coarse resolution, the deviant does not")
{
    // N=1024 with resolution 0.05: mass-weighted normal amplitudes round to
    // zero at the transfer peak while the deviant stays visible.
    const std::size_t n = 1024;
    const Ensemble e = world(n, {7});
    const Ensemble d = apply_design(e, design_support(e, 16.0));
    const ArrowSystem sys = build_full(d);
    const double period = deviant_period(sys);
    const double dt = recommended_timestep(sys);
    const double cycles = predict_transfer_cycles(rotate(build_reduced(d)), n, 1);
    LeapfrogOptions opts;
    opts.watch = {8, 1};
    opts.watch_every = 4;
    const Evolution evo =
        leapfrog_evolve(sys, push_support(sys, 1.0), dt, static_cast<std::size_t>(1.2 * cycles * period / dt), opts);

    auto series = [&](std::size_t w, std::size_t pendulum) {
        ProbeSeries s;
        s.cycle_period = period;
        s.times = evo.watches[w].times;
        for (double x : evo.watches[w].displacements)
            s.amplitudes.push_back(mass_weighted(sys, pendulum, x));
        return observe(s, channel(0.05, dt, 1e6));
    };
    const QuantizedSeries deviant = series(0, 7);
    const QuantizedSeries normal = series(1, 0);
    CHECK(*std::max_element(deviant.values().begin(), deviant.values().end()) > 0.5);
    for (double v : normal.values())
        CHECK(v == 0.0);
}

TEST_CASE("counting at the calibration fraction returns it exactly")
{
    const Ensemble e = world(400, fraction_placement(400, 0.02, 6));
    const CountCalibration cal = calibrate_count(e);
    CHECK(cal.epsilon0 == doctest::Approx(0.02));
    CHECK(count_fraction(e, cal).epsilon_hat == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("cutting the routing phases short moves less energy")
{
    RouteOptions half;
    half.phase_scale = 0.5;
    const double full = route_energy(world(64, {}), 3, 50).final_dest_fraction;
    const double shorter = route_energy(world(64, {}), 3, 50, half).final_dest_fraction;
    CHECK(full >= 0.5);
    CHECK(shorter < full);
}

TEST_CASE("presence ratios at N=1024 fall in two separated bands")
{
    double lowest_absent = std::numeric_limits<double>::infinity(), highest_present = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto pick = random_placement(1024, 2, 300 + seed);
        const double absent = presence_test(world(1024, {}), pick[0]).ratio;
        const double present = presence_test(world(1024, {pick[1]}), pick[0]).ratio;
        CHECK(absent == doctest::Approx(1.0).epsilon(0.05));
        CHECK(present == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.05));
        lowest_absent = std::min(lowest_absent, absent);
        highest_present = std::max(highest_present, present);
    }
    CHECK(lowest_absent / highest_present >= 1.2);
}
