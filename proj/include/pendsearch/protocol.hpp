#pragma once

// Search, counting and routing procedures built on the coupled-pendulum
// simulator. Decisions consume only quantized observations: raw probe
// readings reach the decision code exclusively through observe().

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pendsearch/dynamics.hpp"
#include "pendsearch/ensemble.hpp"
#include "pendsearch/spectral.hpp"

namespace pendsearch {

struct ObservationChannel {
    double resolution = 0.0;      // amplitude quantum, independent of N
    double sample_interval = 0.0; // s
    double max_cycles = 0.0;      // observation budget, in probe oscillation cycles

    void validate() const;
};

/// Unquantized readings of one pendulum's mass-weighted displacement.
struct ProbeSeries {
    std::vector<double> times;
    std::vector<double> amplitudes;
    double cycle_period = 0.0; // oscillation period of the probed pendulum (s)
};

class QuantizedSeries {
public:
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double resolution() const noexcept { return resolution_; }
    double cycle_period() const noexcept { return cycle_period_; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    friend QuantizedSeries observe(const ProbeSeries&, const ObservationChannel&);
    friend QuantizedSeries observe(const QuantizedSeries&, const ObservationChannel&);

    std::vector<double> times_;
    std::vector<double> values_;
    double resolution_ = 0.0;
    double cycle_period_ = 0.0;
};

/// Round every reading to the nearest multiple of the resolution, keep one
/// reading per sample interval, and drop readings past the cycle budget.
QuantizedSeries observe(const ProbeSeries& series, const ObservationChannel& channel);
QuantizedSeries observe(const QuantizedSeries& series, const ObservationChannel& channel);

struct EnvelopeEstimate {
    double period_cycles = 0.0;
    std::vector<double> peak_times; // s
};

/// Period of the slow amplitude envelope, in probe cycles, from the spacing
/// of successive envelope maxima.
EnvelopeEstimate envelope_period(const QuantizedSeries& samples);

struct ProtocolConfig {
    double push_speed = 1.0;
    DesignOptions design;
    double budget_factor = 3.0;        // observation budget / predicted single-deviant beat
    double resolution_fraction = 0.02; // resolution / predicted deviant peak amplitude
    std::size_t samples_per_cycle = 32;
    // Fixed channel settings; unset ones follow from the design.
    std::optional<double> resolution;
    std::optional<double> sample_interval;
    std::optional<double> max_cycles;
};

/// Support design and expectations for a hung set in which exactly one
/// pendulum (the probe) is assumed short.
struct SearchCalibration {
    ResonanceDesign design;
    double expected_single = 0.0; // full-beat period, cycles, one short pendulum
    double cycle_period = 0.0;    // deviant oscillation period (s)
    double predicted_peak_amplitude = 0.0;
    ObservationChannel channel;
};

SearchCalibration calibrate_search(const Ensemble& hung, std::size_t probe_index, const ProtocolConfig& config = {});

struct BeatMeasurement {
    double period_cycles = 0.0;
    double energy_drift = 0.0;
    std::vector<double> peak_times;
};

/// Push the support of an already designed ensemble, watch one pendulum
/// through the channel, and measure its envelope period.
BeatMeasurement measure_beat(const Ensemble& designed, std::size_t probe_index, const ObservationChannel& channel,
                             double push_speed = 1.0);

struct PresenceVerdict {
    bool present = false;
    double measured_period = 0.0;
    double expected_single = 0.0;
    double expected_double = 0.0;
    double ratio = 0.0; // measured / expected_single
    double energy_drift = 0.0;
};

/// Verdict threshold on measured/expected_single: geometric midpoint of 1 and 1/sqrt(2).
double presence_threshold();

PresenceVerdict presence_test(const Ensemble& ensemble, std::size_t probe_index, const ProtocolConfig& config = {});
PresenceVerdict presence_test(const Ensemble& ensemble, std::size_t probe_index, const ObservationChannel& channel,
                              const ProtocolConfig& config = {});

struct RoundRecord {
    std::size_t round = 0;
    std::size_t subset_size = 0; // candidate pendulums hung in the tested half
    double period_cycles = 0.0;
    double ratio = 0.0;
    bool present = false;
};

struct IdentifyResult {
    std::size_t index = 0;
    std::vector<RoundRecord> rounds;
    std::size_t presence_tests = 0;
    double max_energy_drift = 0.0;
};

struct IdentifyOptions {
    ProtocolConfig protocol;
    /// Shuffles the split of each candidate set; 0 keeps index order.
    std::uint64_t seed = 0;
};

/// Binary search with presence tests. Every round hangs the tested half of the
/// candidates, one shortened probe from the other half, and known-normal
/// padding so that the hung count (and hence the support design) is the
/// same in every round.
IdentifyResult identify(const Ensemble& ensemble, const IdentifyOptions& options = {});

/// Columns round,subset_size,period_cycles,ratio,verdict.
void write_transcript_csv(std::ostream& out, const std::vector<RoundRecord>& rounds);

struct CountCalibration {
    double epsilon0 = 0.0;
    double period_cycles = 0.0;
    ResonanceDesign design;
    ObservationChannel channel;
    double energy_drift = 0.0;
};

struct CountEstimate {
    double epsilon_hat = 0.0;
    double measured_period = 0.0;
    double calibration_period = 0.0;
    double energy_drift = 0.0;
};

/// Pendulum 0 is the observed short pendulum in counting runs.
inline constexpr std::size_t count_probe_index = 0;

/// Deviant positions for a fraction epsilon of n pendulums: index 0 plus
/// round(epsilon n) - 1 seeded random others.
std::vector<std::size_t> fraction_placement(std::size_t n, double epsilon, std::uint64_t seed);

/// count distinct indices in [0, n), drawn by seed, sorted.
std::vector<std::size_t> random_placement(std::size_t n, std::size_t count, std::uint64_t seed);

CountCalibration calibrate_count(const Ensemble& calibration_ensemble, const ProtocolConfig& config = {});
/// epsilon_hat = epsilon0 (P0 / P)^2.
CountEstimate count_fraction(const Ensemble& ensemble, const CountCalibration& calibration,
                             const ProtocolConfig& config = {});

struct RouteOptions {
    ProtocolConfig protocol;
    double phase_scale = 1.0; // phase duration / predicted transfer time
};

struct RouteResult {
    std::vector<double> times;
    std::vector<double> source_energy;
    std::vector<double> dest_energy;
    std::vector<double> support_energy;
    std::vector<double> other_energy;
    std::vector<double> total_energy;
    EnergyTrace trace; // groups follow the active short pendulum of each phase
    double phase_duration = 0.0;
    double initial_source_energy = 0.0;
    double final_dest_energy = 0.0;
    double final_dest_fraction = 0.0;
    // Worst drift within a phase; the length switch itself changes the energy.
    double integrator_drift = 0.0;
};

/// Two-phase transfer: source shortened (energy flows source -> support
/// modes), then source restored and destination shortened (support modes ->
/// destination). The source starts with a velocity kick.
RouteResult route_energy(const Ensemble& ensemble, std::size_t source, std::size_t dest,
                         const RouteOptions& options = {});

/// Columns t,E_source,E_dest,E_support,E_other,E_total.
void write_route_csv(std::ostream& out, const RouteResult& route);

} // namespace pendsearch
