#pragma once

// Scenario files (JSON) and the experiment runner behind the command-line tool.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pendsearch/ensemble.hpp"
#include "pendsearch/powerlaw.hpp"
#include "pendsearch/protocol.hpp"

namespace pendsearch {

enum class ScenarioKind { simulate, design, presence, identify, count, route, quantum, collide, sweep };

std::string to_string(ScenarioKind kind);
std::optional<ScenarioKind> parse_kind(const std::string& name);

struct Scenario {
    ScenarioKind kind = ScenarioKind::simulate;

    // ensemble
    std::size_t n = 64;
    double normal_mass = 1.0;
    double normal_length = 1.0;
    double deviant_mass = 1.0;
    double deviant_length = 0.5;
    std::optional<std::vector<std::size_t>> deviant_indices;
    // Placed by seed when deviant_indices is absent; defaults to 1 (0 for route).
    std::optional<std::size_t> deviant_count;
    double support_mass = 16.0;
    double support_length = 1.0;
    bool design_support = true;
    double gravity = standard_gravity;
    double push_speed = 1.0;

    // protocol and observation
    double budget_factor = 3.0;
    double resolution_fraction = 0.02;
    std::size_t samples_per_cycle = 32;
    std::optional<double> gap_min;
    std::optional<Branch> branch;
    std::optional<double> channel_resolution;
    std::optional<double> channel_sample_interval;
    std::optional<double> channel_max_cycles;

    // per kind
    std::optional<double> simulate_cycles; // default: 1.5 predicted beats
    std::optional<double> simulate_dt;
    std::optional<std::size_t> presence_probe;
    double count_epsilon = 0.04;
    double count_epsilon0 = 0.01;
    std::size_t route_source = 0;
    std::size_t route_dest = 1;
    double route_phase_scale = 1.0;
    std::size_t quantum_n = 100;
    std::optional<double> quantum_t_max; // default: pi sqrt(n)
    std::size_t quantum_samples = 1001;
    std::size_t collide_n = 100;
    std::string sweep_variable = "n";
    std::vector<double> sweep_values;

    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string output = "out";

    /// Every invariant violation, one message each; empty when valid.
    std::vector<std::string> problems() const;
    /// Throws ValidationError listing every problem.
    void validate() const;
    /// Fully defaulted echo (used in run manifests).
    nlohmann::ordered_json to_json() const;

    ProtocolConfig protocol_config() const;
};

/// Parse scenario text. Syntax errors report line and column; type and
/// unknown-key errors name the field path. Both raise ParseError. The result
/// is not yet validated.
Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
/// Read, parse and validate.
Scenario load_scenario(const std::filesystem::path& path);

/// Ensemble described by the scenario; deviant placement follows the seed
/// when explicit indices are absent. The support is left as written.
Ensemble build_ensemble(const Scenario& scenario);

struct SweepRow {
    double x = 0.0;
    double measured = 0.0;
    double predicted = 0.0;
};

struct SweepResult {
    std::string variable;
    std::vector<SweepRow> rows;
    PowerLawFit fit;
};

/// Runs each sweep point (up to scenario.workers at once); rows come back in
/// sweep-axis order.
SweepResult run_sweep(const Scenario& scenario);

struct RunOutcome {
    std::vector<std::filesystem::path> artifacts;
    nlohmann::ordered_json manifest;
};

/// Execute a validated scenario and write its CSV artifacts and manifest.json
/// into out_dir. On failure every artifact written so far is removed and the
/// error propagates.
RunOutcome run(const Scenario& scenario, const std::filesystem::path& out_dir);

/// Process exit status for an error (2 validation, 3 physics/protocol, 4 inconclusive).
int exit_code_for(const std::exception& error);

} // namespace pendsearch
