#include "flock/scenario.hpp"

#include "flock/error.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace flocking {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed)
{
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key))
            fail(std::string("unknown key '") + key + "' in " + where);
}

double get_number(const json& j, const char* key)
{
    if (!j[key].is_number())
        fail(std::string("'") + key + "' must be a number");
    return j[key].get<double>();
}

Vec3 get_vec3(const json& j)
{
    if (!j.is_array() || j.size() != 3)
        fail("expected an array of 3 numbers");
    for (const auto& v : j)
        if (!v.is_number())
            fail("expected an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

FormationSpec formation_entry(const json& j, const std::filesystem::path& base_dir)
{
    if (j.is_object() && j.contains("file")) {
        if (!j["file"].is_string())
            fail("formation 'file' must be a string");
        std::filesystem::path p = j["file"].get<std::string>();
        if (p.is_relative())
            p = base_dir / p;
        return load_formation(read_file(p));
    }
    return formation_from_json(j);
}

AgentsSpec parse_agents(const json& j)
{
    if (!j.is_object())
        fail("'agents' must be an object");
    check_keys(j, "agents",
               {"count", "model", "k", "v_max_agent", "yaw_rate_max_dps", "initial_positions", "initial_yaw_deg",
                "jitter", "setup_speed"});
    AgentsSpec a;
    if (!j.contains("count") || !j["count"].is_number_integer())
        fail("'agents.count' must be an integer");
    a.count = j["count"].get<int>();
    if (j.contains("model")) {
        const auto m = j["model"].get<std::string>();
        if (m == "ideal")
            a.model.mode = AgentModel::Mode::Ideal;
        else if (m == "lagged")
            a.model.mode = AgentModel::Mode::Lagged;
        else
            fail("'agents.model' must be 'ideal' or 'lagged'");
    }
    if (j.contains("k"))
        a.model.k = get_number(j, "k");
    if (j.contains("v_max_agent"))
        a.model.v_max_agent = get_number(j, "v_max_agent");
    if (j.contains("yaw_rate_max_dps"))
        a.model.yaw_rate_max = deg_to_rad(get_number(j, "yaw_rate_max_dps"));
    if (j.contains("initial_positions")) {
        for (const auto& p : j["initial_positions"])
            a.initial_positions.push_back(get_vec3(p));
        if (a.initial_positions.size() != static_cast<std::size_t>(a.count))
            fail("'agents.initial_positions' must list one position per agent");
    }
    if (j.contains("initial_yaw_deg")) {
        for (const auto& y : j["initial_yaw_deg"]) {
            if (!y.is_number())
                fail("'agents.initial_yaw_deg' entries must be numbers");
            a.initial_yaws.push_back(deg_to_rad(y.get<double>()));
        }
        if (a.initial_yaws.size() != static_cast<std::size_t>(a.count))
            fail("'agents.initial_yaw_deg' must list one yaw per agent");
    }
    if (j.contains("jitter"))
        a.jitter = get_number(j, "jitter");
    if (j.contains("setup_speed"))
        a.setup_speed = get_number(j, "setup_speed");
    if (a.jitter < 0.0)
        fail("'agents.jitter' must be non-negative");
    return a;
}

EngineSpec parse_engine(const json& j)
{
    if (!j.is_object())
        fail("'engine' must be an object");
    check_keys(j, "engine", {"dt", "seed", "tail", "duration"});
    EngineSpec e;
    if (j.contains("dt"))
        e.dt = get_number(j, "dt");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            fail("'engine.seed' must be a non-negative integer");
        e.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("tail"))
        e.tail = get_number(j, "tail");
    if (j.contains("duration"))
        e.duration = get_number(j, "duration");
    if (!(e.dt > 0.0))
        fail("'engine.dt' must be positive");
    return e;
}

MetricsSpec parse_metrics(const json& j)
{
    if (!j.is_object())
        fail("'metrics' must be an object");
    check_keys(j, "metrics", {"d_max", "d_min", "delta", "window"});
    MetricsSpec m;
    if (j.contains("d_max"))
        m.d_max = get_number(j, "d_max");
    if (j.contains("d_min"))
        m.d_min = get_number(j, "d_min");
    if (j.contains("delta"))
        m.delta = get_number(j, "delta");
    if (j.contains("window")) {
        const auto& w = j["window"];
        if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
            fail("'metrics.window' must be [start, end]");
        m.window = Window{w[0].get<double>(), w[1].get<double>()};
    }
    return m;
}

} // namespace

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        fail("scenario must be a JSON object");
    check_keys(doc, "scenario",
               {"name", "description", "formation", "formations", "trajectory", "agents", "engine", "events",
                "metrics"});

    try {
        Scenario s;
        s.name = doc.value("name", std::string("unnamed"));
        s.description = doc.value("description", std::string());
        if (!doc.contains("formation"))
            fail("scenario needs a 'formation'");
        s.formation = formation_entry(doc["formation"], base_dir);
        if (doc.contains("formations")) {
            if (!doc["formations"].is_object())
                fail("'formations' must map names to formations");
            for (const auto& [name, f] : doc["formations"].items())
                s.formations.emplace(name, formation_entry(f, base_dir).renamed(name));
        }
        s.formations.emplace(s.formation.name(), s.formation);

        if (!doc.contains("trajectory"))
            fail("scenario needs a 'trajectory'");
        s.trajectory = trajectory_from_json(doc["trajectory"]);

        if (!doc.contains("agents"))
            fail("scenario needs 'agents'");
        s.agents = parse_agents(doc["agents"]);
        if (static_cast<std::size_t>(s.agents.count) != s.formation.size())
            fail("agent count " + std::to_string(s.agents.count) + " differs from the formation's " +
                 std::to_string(s.formation.size()) + " slots");
        if (doc.contains("engine"))
            s.engine = parse_engine(doc["engine"]);
        if (doc.contains("metrics"))
            s.metrics = parse_metrics(doc["metrics"]);

        if (doc.contains("events")) {
            if (!doc["events"].is_array())
                fail("'events' must be a list");
            double last = -std::numeric_limits<double>::infinity();
            for (const auto& e : doc["events"]) {
                if (!e.is_object() || !e.contains("t") || !e["t"].is_number() || !e.contains("command"))
                    fail("each event needs 't' and 'command'");
                ScenarioEvent ev{e["t"].get<double>(), command_from_json(e["command"], s.formations), e["command"]};
                if (ev.t < last)
                    fail("event times must be nondecreasing");
                last = ev.t;
                s.events.push_back(std::move(ev));
            }
        }

        s.document = doc;
        s.document["name"] = s.name;
        s.document["formation"] = formation_to_json(s.formation);
        return s;
    } catch (const json::exception& e) {
        fail(std::string("scenario field has the wrong type: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::UnknownFormation)
            fail(e.what());
        throw;
    }
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        // An unreadable scenario is a bad input, not an output failure.
        fail(e.what());
    }
    return parse_scenario(text, path.parent_path());
}

Scenario resolve_scenario(const std::string& name_or_path)
{
    if (preset_document(name_or_path))
        return load_preset(name_or_path);
    return load_scenario(name_or_path);
}

Scenario load_preset(std::string_view name)
{
    auto doc = preset_document(name);
    if (!doc)
        throw Error(ErrorKind::ParseError, "no preset named '" + std::string(name) + "'");
    return parse_scenario(*doc);
}

} // namespace flocking
