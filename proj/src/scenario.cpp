#include "pendsearch/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "pendsearch/errors.hpp"

namespace pendsearch {

namespace {

constexpr const char* kind_names[] = {"simulate", "design",  "presence", "identify", "count",
                                      "route",    "quantum", "collide",  "sweep"};

const std::set<std::string> sweep_variables{"n", "epsilon", "quantum_n", "collide_n"};

std::size_t resolved_deviant_count(const Scenario& s)
{
    if (s.deviant_count)
        return *s.deviant_count;
    return s.kind == ScenarioKind::route ? 0 : 1;
}

// Walks one JSON object, remembering which keys were read so leftovers can be
// reported as unknown fields.
class Reader {
public:
    Reader(const nlohmann::json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object())
            fail(path_.empty() ? "scenario" : path_, "expected an object");
    }

    // null reads as absent, so a defaulted echo parses back unchanged.
    bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

    void number(const std::string& key, double& out)
    {
        if (has(key))
            out = number_at(key);
    }
    void number(const std::string& key, std::optional<double>& out)
    {
        if (has(key))
            out = number_at(key);
    }

    void count(const std::string& key, std::size_t& out)
    {
        if (has(key))
            out = count_at(key);
    }
    void count(const std::string& key, std::optional<std::size_t>& out)
    {
        if (has(key))
            out = count_at(key);
    }

    void flag(const std::string& key, bool& out)
    {
        const nlohmann::json* v = get(key);
        if (!v)
            return;
        if (!v->is_boolean())
            fail(field(key), "expected true or false");
        out = v->get<bool>();
    }

    void text(const std::string& key, std::string& out)
    {
        const nlohmann::json* v = get(key);
        if (!v)
            return;
        if (!v->is_string())
            fail(field(key), "expected a string");
        out = v->get<std::string>();
    }

    void seed(const std::string& key, std::uint64_t& out)
    {
        const nlohmann::json* v = get(key);
        if (!v)
            return;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
            fail(field(key), "expected a non-negative integer");
        out = v->get<std::uint64_t>();
    }

    void indices(const std::string& key, std::optional<std::vector<std::size_t>>& out)
    {
        const nlohmann::json* v = get(key);
        if (!v)
            return;
        if (!v->is_array())
            fail(field(key), "expected an array of indices");
        std::vector<std::size_t> list;
        for (std::size_t i = 0; i < v->size(); ++i) {
            const nlohmann::json& e = (*v)[i];
            if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0))
                fail(field(key) + "[" + std::to_string(i) + "]", "expected a non-negative integer");
            list.push_back(e.get<std::size_t>());
        }
        out = std::move(list);
    }

    void numbers(const std::string& key, std::vector<double>& out)
    {
        const nlohmann::json* v = get(key);
        if (!v)
            return;
        if (!v->is_array())
            fail(field(key), "expected an array of numbers");
        out.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_number())
                fail(field(key) + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back((*v)[i].get<double>());
        }
    }

    // Nested object; absent objects read as empty.
    template <class F>
    void section(const std::string& key, F&& body)
    {
        static const nlohmann::json empty = nlohmann::json::object();
        const nlohmann::json* v = get(key);
        Reader inner(v ? *v : empty, field(key));
        body(inner);
        inner.finish();
    }

    void finish() const
    {
        for (const auto& item : node_.items())
            if (!seen_.count(item.key()) && !item.value().is_null())
                fail(field(item.key()), "unknown field");
    }

private:
    const nlohmann::json* get(const std::string& key)
    {
        seen_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() || it->is_null() ? nullptr : &*it;
    }

    double number_at(const std::string& key)
    {
        const nlohmann::json* v = get(key);
        if (!v || !v->is_number())
            fail(field(key), "expected a number");
        return v->get<double>();
    }

    std::size_t count_at(const std::string& key)
    {
        const nlohmann::json* v = get(key);
        if (v->is_number_float()) {
            const double d = v->get<double>();
            if (d >= 0.0 && d == std::floor(d) && d < 9e15)
                return static_cast<std::size_t>(d);
        }
        if (v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0))
            return v->get<std::size_t>();
        fail(field(key), "expected a non-negative integer");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    [[noreturn]] static void fail(const std::string& where, const std::string& what)
    {
        throw ParseError("field '" + where + "': " + what);
    }

    const nlohmann::json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

std::string branch_name(const std::optional<Branch>& b)
{
    if (!b)
        return "auto";
    return *b == Branch::upper ? "upper" : "lower";
}

std::string describe_offset(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

bool positive(double v)
{
    return v > 0.0 && std::isfinite(v);
}

} // namespace

std::string to_string(ScenarioKind kind)
{
    return kind_names[static_cast<int>(kind)];
}

std::optional<ScenarioKind> parse_kind(const std::string& name)
{
    for (int i = 0; i < static_cast<int>(std::size(kind_names)); ++i)
        if (name == kind_names[i])
            return static_cast<ScenarioKind>(i);
    return std::nullopt;
}

Scenario parse_scenario(const std::string& text, const std::string& source)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::string what = e.what();
        if (auto pos = what.find("syntax error"); pos != std::string::npos)
            what = what.substr(pos);
        throw ParseError(source + ": " + describe_offset(text, e.byte) + ": " + what);
    }

    Scenario s;
    try {
        Reader r(doc, "");
        std::string kind = to_string(s.kind);
        r.text("kind", kind);
        const auto parsed_kind = parse_kind(kind);
        if (!parsed_kind)
            throw ParseError("field 'kind': unknown kind '" + kind + "'");
        s.kind = *parsed_kind;

        r.count("n", s.n);
        r.number("gravity", s.gravity);
        r.number("push_speed", s.push_speed);
        r.seed("seed", s.seed);
        r.count("workers", s.workers);
        r.text("output", s.output);
        r.indices("deviant_indices", s.deviant_indices);
        r.count("deviant_count", s.deviant_count);

        r.section("normal", [&](Reader& q) {
            q.number("mass", s.normal_mass);
            q.number("length", s.normal_length);
        });
        r.section("deviant", [&](Reader& q) {
            q.number("mass", s.deviant_mass);
            q.number("length", s.deviant_length);
        });
        r.section("support", [&](Reader& q) {
            q.number("mass", s.support_mass);
            q.number("length", s.support_length);
            q.flag("design", s.design_support);
        });
        r.section("protocol", [&](Reader& q) {
            q.number("budget_factor", s.budget_factor);
            q.number("resolution_fraction", s.resolution_fraction);
            q.count("samples_per_cycle", s.samples_per_cycle);
            q.number("gap_min", s.gap_min);
            std::string branch = branch_name(s.branch);
            q.text("branch", branch);
            if (branch == "upper")
                s.branch = Branch::upper;
            else if (branch == "lower")
                s.branch = Branch::lower;
            else if (branch == "auto")
                s.branch.reset();
            else
                throw ParseError("field 'protocol.branch': expected upper, lower or auto");
        });
        r.section("channel", [&](Reader& q) {
            q.number("resolution", s.channel_resolution);
            q.number("sample_interval", s.channel_sample_interval);
            q.number("max_cycles", s.channel_max_cycles);
        });
        r.section("simulate", [&](Reader& q) {
            q.number("cycles", s.simulate_cycles);
            q.number("dt", s.simulate_dt);
        });
        r.section("presence", [&](Reader& q) { q.count("probe", s.presence_probe); });
        r.section("count", [&](Reader& q) {
            q.number("epsilon", s.count_epsilon);
            q.number("epsilon0", s.count_epsilon0);
        });
        r.section("route", [&](Reader& q) {
            q.count("source", s.route_source);
            q.count("dest", s.route_dest);
            q.number("phase_scale", s.route_phase_scale);
        });
        r.section("quantum", [&](Reader& q) {
            q.count("n", s.quantum_n);
            q.number("t_max", s.quantum_t_max);
            q.count("samples", s.quantum_samples);
        });
        r.section("collide", [&](Reader& q) { q.count("n", s.collide_n); });
        r.section("sweep", [&](Reader& q) {
            q.text("variable", s.sweep_variable);
            q.numbers("values", s.sweep_values);
        });
        r.finish();
    } catch (const ParseError& e) {
        throw ParseError(source + ": " + e.what());
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    Scenario s = parse_scenario(buf.str(), path.string());
    s.validate();
    return s;
}

std::vector<std::string> Scenario::problems() const
{
    std::vector<std::string> p;
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok)
            p.push_back(msg);
    };

    need(n >= 2, "n: need at least 2 pendulums (got " + std::to_string(n) + ")");
    need(positive(normal_mass), "normal.mass must be positive");
    need(positive(normal_length), "normal.length must be positive");
    need(positive(deviant_mass), "deviant.mass must be positive");
    need(positive(deviant_length), "deviant.length must be positive");
    need(positive(support_mass), "support.mass must be positive");
    need(positive(support_length), "support.length must be positive");
    need(positive(gravity), "gravity must be positive");
    need(push_speed >= 0.0 && std::isfinite(push_speed), "push_speed must be non-negative");

    if (deviant_indices) {
        std::set<std::size_t> unique(deviant_indices->begin(), deviant_indices->end());
        need(unique.size() == deviant_indices->size(), "deviant_indices contains duplicates");
        need(unique.empty() || *unique.rbegin() < n, "deviant_indices: index out of range for n");
        need(2 * unique.size() <= n, "deviant_indices: more than n/2 deviants");
        need(!deviant_count, "deviant_indices and deviant_count are mutually exclusive");
    }
    need(2 * resolved_deviant_count(*this) <= n, "deviant_count: more than n/2 deviants");

    need(positive(budget_factor), "protocol.budget_factor must be positive");
    need(positive(resolution_fraction), "protocol.resolution_fraction must be positive");
    need(samples_per_cycle >= 4, "protocol.samples_per_cycle must be at least 4");
    need(!gap_min || (*gap_min >= 0.0 && std::isfinite(*gap_min)), "protocol.gap_min must be non-negative");
    need(!channel_resolution || positive(*channel_resolution), "channel.resolution must be positive");
    need(!channel_sample_interval || positive(*channel_sample_interval), "channel.sample_interval must be positive");
    need(!channel_max_cycles || positive(*channel_max_cycles), "channel.max_cycles must be positive");

    need(!simulate_cycles || positive(*simulate_cycles), "simulate.cycles must be positive");
    need(!simulate_dt || positive(*simulate_dt), "simulate.dt must be positive");
    if (kind == ScenarioKind::presence)
        need(!presence_probe || *presence_probe < n, "presence.probe out of range for n");
    need(count_epsilon > 0.0 && count_epsilon <= 0.5, "count.epsilon must lie in (0, 0.5]");
    need(count_epsilon0 > 0.0 && count_epsilon0 <= 0.5, "count.epsilon0 must lie in (0, 0.5]");
    if (kind == ScenarioKind::route) {
        need(route_source < n, "route.source out of range for n");
        need(route_dest < n, "route.dest out of range for n");
    }
    need(positive(route_phase_scale), "route.phase_scale must be positive");
    need(quantum_n >= 2, "quantum.n must be at least 2");
    need(!quantum_t_max || positive(*quantum_t_max), "quantum.t_max must be positive");
    need(quantum_samples >= 2, "quantum.samples must be at least 2");
    need(collide_n >= 4, "collide.n must be at least 4");
    need(workers >= 1, "workers must be at least 1");
    need(!output.empty(), "output must not be empty");

    if (kind == ScenarioKind::sweep) {
        need(sweep_variables.count(sweep_variable) == 1, "sweep.variable must be one of n, epsilon, quantum_n, collide_n");
        need(sweep_values.size() >= 3, "sweep.values: need at least 3 values to fit");
        need(std::all_of(sweep_values.begin(), sweep_values.end(), positive), "sweep.values must be positive");
        need(std::adjacent_find(sweep_values.begin(), sweep_values.end(), std::greater_equal<>()) ==
                 sweep_values.end(),
             "sweep.values must be strictly increasing");
        if (sweep_variable != "epsilon")
            need(std::all_of(sweep_values.begin(), sweep_values.end(),
                             [](double v) { return v == std::floor(v) && v < 1e9; }),
                 "sweep.values must be integers for " + sweep_variable);
        else
            need(std::all_of(sweep_values.begin(), sweep_values.end(), [](double v) { return v <= 0.5; }),
                 "sweep.values: epsilon must not exceed 0.5");
    }
    return p;
}

void Scenario::validate() const
{
    const auto list = problems();
    if (list.empty())
        return;
    std::string msg = "invalid scenario:";
    for (const auto& item : list)
        msg += "\n  - " + item;
    throw ValidationError(msg);
}

nlohmann::ordered_json Scenario::to_json() const
{
    using oj = nlohmann::ordered_json;
    auto opt = [](const auto& v) -> oj { return v ? oj(*v) : oj(nullptr); };

    oj j;
    j["kind"] = to_string(kind);
    j["n"] = n;
    j["gravity"] = gravity;
    j["push_speed"] = push_speed;
    j["seed"] = seed;
    j["workers"] = workers;
    j["output"] = output;
    if (deviant_indices)
        j["deviant_indices"] = *deviant_indices;
    else
        j["deviant_count"] = resolved_deviant_count(*this);
    j["normal"] = {{"mass", normal_mass}, {"length", normal_length}};
    j["deviant"] = {{"mass", deviant_mass}, {"length", deviant_length}};
    j["support"] = {{"mass", support_mass}, {"length", support_length}, {"design", design_support}};
    j["protocol"] = {{"budget_factor", budget_factor},
                     {"resolution_fraction", resolution_fraction},
                     {"samples_per_cycle", samples_per_cycle},
                     {"gap_min", opt(gap_min)},
                     {"branch", branch_name(branch)}};
    j["channel"] = {{"resolution", opt(channel_resolution)},
                    {"sample_interval", opt(channel_sample_interval)},
                    {"max_cycles", opt(channel_max_cycles)}};
    j["simulate"] = {{"cycles", opt(simulate_cycles)}, {"dt", opt(simulate_dt)}};
    j["presence"] = {{"probe", opt(presence_probe)}};
    j["count"] = {{"epsilon", count_epsilon}, {"epsilon0", count_epsilon0}};
    j["route"] = {{"source", route_source}, {"dest", route_dest}, {"phase_scale", route_phase_scale}};
    j["quantum"] = {{"n", quantum_n}, {"t_max", opt(quantum_t_max)}, {"samples", quantum_samples}};
    j["collide"] = {{"n", collide_n}};
    j["sweep"] = {{"variable", sweep_variable}, {"values", sweep_values}};
    return j;
}

ProtocolConfig Scenario::protocol_config() const
{
    ProtocolConfig c;
    c.push_speed = push_speed;
    c.design.branch = branch;
    c.design.gap_min = gap_min;
    c.budget_factor = budget_factor;
    c.resolution_fraction = resolution_fraction;
    c.samples_per_cycle = samples_per_cycle;
    c.resolution = channel_resolution;
    c.sample_interval = channel_sample_interval;
    c.max_cycles = channel_max_cycles;
    return c;
}

Ensemble build_ensemble(const Scenario& s)
{
    std::vector<std::size_t> deviants;
    if (s.deviant_indices)
        deviants = *s.deviant_indices;
    else if (s.kind == ScenarioKind::count)
        deviants = fraction_placement(s.n, s.count_epsilon, s.seed);
    else
        deviants = random_placement(s.n, resolved_deviant_count(s), s.seed);
    return Ensemble(s.n, PendulumSpec(s.normal_mass, s.normal_length), PendulumSpec(s.deviant_mass, s.deviant_length),
                    std::move(deviants), s.support_mass, s.support_length, s.gravity);
}

int exit_code_for(const std::exception& error)
{
    if (const auto* e = dynamic_cast<const Error*>(&error)) {
        switch (e->kind()) {
        case ErrorKind::validation: return 2;
        case ErrorKind::physics: return 3;
        case ErrorKind::inconclusive: return 4;
        }
    }
    return 1;
}

} // namespace pendsearch
