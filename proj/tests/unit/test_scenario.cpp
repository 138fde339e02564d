#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pendsearch/errors.hpp"
#include "pendsearch/scenario.hpp"

using namespace pendsearch;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("pendsearch_unit_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Scenario valid(const std::string& text)
{
    Scenario s = parse_scenario(text);
    s.validate();
    return s;
}

} // namespace

TEST_CASE("minimal scenario is filled with defaults")
{
    const Scenario s = valid(R"({"kind": "simulate", "n": 64})");
    CHECK(s.kind == ScenarioKind::simulate);
    CHECK(s.n == 64);
    CHECK(s.gravity == 9.81);
    CHECK(s.push_speed == 1.0);

    const auto echo = s.to_json();
    CHECK(echo["gravity"] == 9.81);
    CHECK(echo["push_speed"] == 1.0);
    CHECK(echo["deviant_count"] == 1);
    CHECK(echo["support"]["mass"] == 16.0);
    CHECK(echo["protocol"]["branch"] == "auto");
    // The echo parses back to the same scenario.
    CHECK(parse_scenario(echo.dump()).to_json() == echo);
}

TEST_CASE("n = 0 is rejected by name")
{
    try {
        valid(R"({"kind": "design", "n": 0})");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("n:") != std::string::npos);
    }
}

TEST_CASE("every violated invariant is listed")
{
    const Scenario s = parse_scenario(
        R"({"kind": "sweep", "gravity": -1, "normal": {"length": 0}, "sweep": {"values": [3, 2]}})");
    const auto p = s.problems();
    CHECK(p.size() >= 4);
    std::string all;
    for (const auto& line : p)
        all += line + "\n";
    CHECK(all.find("gravity") != std::string::npos);
    CHECK(all.find("normal.length") != std::string::npos);
    CHECK(all.find("at least 3") != std::string::npos);
    CHECK(all.find("increasing") != std::string::npos);
}

TEST_CASE("syntax errors carry a line number")
{
    try {
        parse_scenario("{\n  \"kind\": \"design\",\n  \"n\": 64,,\n}", "s.json");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("s.json") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
    }
}

TEST_CASE("type and unknown-field errors name the field")
{
    CHECK_THROWS_WITH_AS(parse_scenario(R"({"n": "many"})"), doctest::Contains("'n'"), ParseError);
    CHECK_THROWS_WITH_AS(parse_scenario(R"({"n": -4})"), doctest::Contains("non-negative"), ParseError);
    CHECK_THROWS_WITH_AS(parse_scenario(R"({"support": {"mas": 2}})"), doctest::Contains("support.mas"), ParseError);
    CHECK_THROWS_WITH_AS(parse_scenario(R"({"kind": "dance"})"), doctest::Contains("dance"), ParseError);
    CHECK_THROWS_AS(parse_scenario(R"({"protocol": {"branch": "sideways"}})"), ParseError);
    CHECK_THROWS_AS(parse_scenario("[1, 2]"), ParseError);
}

TEST_CASE("ensemble placement follows the seed")
{
    const Scenario a = valid(R"({"kind": "presence", "n": 128, "seed": 3})");
    const Scenario b = valid(R"({"kind": "presence", "n": 128, "seed": 4})");
    CHECK(build_ensemble(a).deviant_indices() == build_ensemble(a).deviant_indices());
    CHECK(build_ensemble(a).deviant_indices() != build_ensemble(b).deviant_indices());
    const Scenario c = valid(R"({"kind": "count", "n": 1000, "count": {"epsilon": 0.02}})");
    CHECK(build_ensemble(c).tau() == 20);
    const Scenario d = valid(R"({"kind": "route", "n": 16})");
    CHECK(build_ensemble(d).tau() == 0);
    const Scenario e = valid(R"({"kind": "design", "n": 16, "deviant_indices": [2, 9]})");
    CHECK(build_ensemble(e).deviant_indices() == std::vector<std::size_t>{2, 9});
}

TEST_CASE("quantum run writes P(t) with its maximum near (pi/2) 10")
{
    const fs::path dir = scratch("quantum");
    const RunOutcome out = run(valid(R"({"kind": "quantum", "quantum": {"n": 100}})"), dir);
    CHECK(fs::exists(dir / "quantum.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(out.manifest["results"]["peak_time"].get<double>() == doctest::Approx(5.0 * M_PI).epsilon(0.02));
    CHECK(out.manifest["scenario"]["quantum"]["n"] == 100);
    CHECK(out.manifest.contains("wall_time_s"));
    CHECK(out.manifest["versions"].contains("pendsearch"));
    CHECK(slurp(dir / "quantum.csv").rfind("t,P_full,P_two_level\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("identify run records the deviant and eight verdicts")
{
    const fs::path dir = scratch("identify");
    const RunOutcome out = run(valid(R"({"kind": "identify", "n": 256, "seed": 7})"), dir);
    const auto& r = out.manifest["results"];
    CHECK(r["verdicts"].size() == 8);
    CHECK(r["correct"] == true);
    CHECK(r["identified_index"] == r["deviant_indices"][0]);
    const std::string csv = slurp(dir / "transcript.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
    fs::remove_all(dir);
}

TEST_CASE("repeated runs produce byte-identical tables")
{
    const Scenario s = valid(R"({"kind": "simulate", "n": 64, "simulate": {"cycles": 20}})");
    const fs::path a = scratch("repeat_a"), b = scratch("repeat_b");
    run(s, a);
    run(s, b);
    CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
    CHECK(!slurp(a / "trace.csv").empty());
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("a failed run leaves nothing behind")
{
    const fs::path dir = scratch("failed");
    const Scenario s = valid(R"({"kind": "simulate", "n": 64, "deviant": {"length": 1.0}})");
    try {
        run(s, dir);
        FAIL("expected DegenerateDeviation");
    } catch (const DegenerateDeviation& e) {
        CHECK(exit_code_for(e) == 3);
    }
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("sweep rows do not depend on the worker count")
{
    const std::string text =
        R"({"kind": "sweep", "n": 256, "sweep": {"variable": "n", "values": [64, 128, 256, 512]}, "workers": )";
    const SweepResult one = run_sweep(valid(text + "1}"));
    const SweepResult four = run_sweep(valid(text + "4}"));
    REQUIRE(one.rows.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(one.rows[i].x == four.rows[i].x);
        CHECK(one.rows[i].measured == four.rows[i].measured);
    }
    CHECK(one.fit.slope == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("collision sweep fits a square root")
{
    const SweepResult r =
        run_sweep(valid(R"({"kind": "sweep", "sweep": {"variable": "collide_n", "values": [100, 400, 1600, 10000]}})"));
    CHECK(r.fit.slope == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("exit codes by error family")
{
    CHECK(exit_code_for(ValidationError("x")) == 2);
    CHECK(exit_code_for(ParseError("x")) == 2);
    CHECK(exit_code_for(DegenerateDeviation("x")) == 3);
    CHECK(exit_code_for(Inconsistent("x")) == 3);
    CHECK(exit_code_for(NoBeatDetected("x")) == 4);
    CHECK(exit_code_for(InsufficientSpan("x")) == 4);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
}
