// pendsearch <kind> [--scenario FILE] [--seed S] [--out DIR] [--workers W]
//
// Exit status: 0 success, 2 invalid input, 3 physics or protocol failure,
// 4 inconclusive observation.

#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "pendsearch/errors.hpp"
#include "pendsearch/scenario.hpp"

int main(int argc, char** argv)
{
    using namespace pendsearch;

    CLI::App app{"Search for a deviant pendulum among N coupled to a common support"};
    app.require_subcommand(1, 1);

    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> size_n;
    std::optional<double> t_max;

    const std::pair<const char*, const char*> commands[] = {
        {"simulate", "push the support and trace energy through one transfer"},
        {"design", "choose the support stiffness that resonates with the deviant"},
        {"presence", "one presence test: shorten a probe and time the beat"},
        {"identify", "binary search for the single deviant"},
        {"count", "estimate the deviant fraction from the beat period"},
        {"route", "move energy from one pendulum to another"},
        {"quantum", "marked-state probability under the search Hamiltonian"},
        {"collide", "count collisions of the two-sphere pump"},
        {"sweep", "repeat a measurement over a parameter and fit a power law"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--scenario", scenario_path, "scenario JSON file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "seed for deviant placement and search order");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers, "concurrent sweep points")->check(CLI::PositiveNumber);
        if (std::string(name) == "quantum") {
            sub->add_option("--n", size_n, "number of basis states")->check(CLI::Range(2, 1 << 30));
            sub->add_option("--t-max", t_max, "end of the time grid")->check(CLI::PositiveNumber);
        } else if (std::string(name) == "collide") {
            sub->add_option("--n", size_n, "mass ratio of the spheres")->check(CLI::Range(4, 1 << 30));
        } else {
            sub->add_option("--n", size_n, "number of pendulums");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const std::string kind_name = app.get_subcommands().front()->get_name();
        const ScenarioKind kind = *parse_kind(kind_name);

        Scenario scenario;
        if (!scenario_path.empty()) {
            scenario = load_scenario(scenario_path);
            if (scenario.kind != kind)
                throw ValidationError("scenario kind '" + to_string(scenario.kind) + "' does not match subcommand '" +
                                      kind_name + "'");
        } else {
            scenario.kind = kind;
        }
        if (seed)
            scenario.seed = *seed;
        if (out_dir)
            scenario.output = *out_dir;
        if (workers)
            scenario.workers = *workers;
        if (size_n) {
            if (kind == ScenarioKind::quantum)
                scenario.quantum_n = *size_n;
            else if (kind == ScenarioKind::collide)
                scenario.collide_n = *size_n;
            else
                scenario.n = *size_n;
        }
        if (t_max)
            scenario.quantum_t_max = *t_max;

        const RunOutcome outcome = run(scenario, scenario.output);
        std::cout << outcome.manifest["results"].dump(2) << '\n';
        for (const auto& p : outcome.artifacts)
            std::cerr << "wrote " << p.string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}
