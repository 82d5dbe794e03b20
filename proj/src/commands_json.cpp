#include "flock/commands_json.hpp"

#include "flock/error.hpp"

#include <cmath>

namespace flocking {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

double number(const json& j, const char* key)
{
    if (!j.contains(key) || !j[key].is_number())
        fail(std::string("'") + key + "' must be a number");
    return j[key].get<double>();
}

double number_or(const json& j, const char* key, double fallback)
{
    if (!j.contains(key))
        return fallback;
    return number(j, key);
}

int integer(const json& j, const char* key)
{
    if (!j.contains(key) || !j[key].is_number_integer())
        fail(std::string("'") + key + "' must be an integer");
    return j[key].get<int>();
}

Vec3 vec3(const json& j, const char* what)
{
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number())
        fail(std::string("'") + what + "' must be an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string type_of(const json& j)
{
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        fail("command needs a string 'type'");
    return j["type"].get<std::string>();
}

} // namespace

FormationSpec formation_from_json(const json& j)
{
    if (!j.is_object())
        fail("formation must be an object");
    if (!j.contains("shape"))
        return load_formation(j.dump());

    if (!j["shape"].is_string())
        fail("'shape' must be a string");
    const std::string shape = j["shape"].get<std::string>();
    FormationSpec spec = [&]() -> FormationSpec {
        if (shape == "regular") {
            const int n = integer(j, "n");
            double radius = 0.0;
            if (j.contains("side")) {
                if (n < 2)
                    fail("'side' needs n >= 2");
                radius = number(j, "side") / (2.0 * std::sin(kPi / n));
            } else {
                radius = number(j, "radius");
            }
            return regular_formation(n, radius, number(j, "d_min"));
        }
        if (shape == "line")
            return line_formation(integer(j, "n"), number(j, "spacing"), number(j, "d_min"));
        if (shape == "square")
            return square_formation(number(j, "side"), number(j, "d_min"));
        if (shape == "grid")
            return grid_formation(integer(j, "rows"), integer(j, "cols"), number(j, "spacing"), number(j, "d_min"));
        fail("unknown formation shape '" + shape + "'");
    }();
    if (j.contains("name") && j["name"].is_string())
        spec = spec.renamed(j["name"].get<std::string>());
    return spec;
}

json formation_to_json(const FormationSpec& spec) { return json::parse(formation_to_document(spec)); }

TrajectorySpec trajectory_from_json(const json& j)
{
    if (!j.is_object())
        fail("trajectory must be an object");
    TrajectorySpec spec;
    if (!j.contains("waypoints") || !j["waypoints"].is_array())
        fail("'waypoints' must be a list");
    for (const auto& w : j["waypoints"]) {
        Waypoint wp;
        if (w.is_array()) {
            wp.position = vec3(w, "waypoint");
        } else if (w.is_object() && w.contains("xyz")) {
            wp.position = vec3(w["xyz"], "xyz");
            if (w.contains("hold_yaw_deg"))
                wp.hold_yaw = deg_to_rad(number(w, "hold_yaw_deg"));
        } else {
            fail("each waypoint must be [x, y, z] or an object with 'xyz'");
        }
        spec.waypoints.push_back(wp);
    }
    spec.v_max = number(j, "v_max");
    spec.a_max = number_or(j, "a_max", 1.0);
    spec.yaw_rate_max = deg_to_rad(number_or(j, "yaw_rate_max_dps", 45.0));
    if (j.contains("initial_yaw_deg"))
        spec.initial_yaw = deg_to_rad(number(j, "initial_yaw_deg"));

    const std::string mode = j.value("yaw_mode", std::string("path_facing"));
    if (mode == "path_facing") {
        spec.yaw_mode = PathFacing{};
    } else if (mode.rfind("fixed:", 0) == 0) {
        try {
            std::size_t used = 0;
            const double deg = std::stod(mode.substr(6), &used);
            if (used != mode.size() - 6)
                fail("bad fixed yaw '" + mode + "'");
            spec.yaw_mode = FixedYaw{deg_to_rad(deg)};
        } catch (const std::logic_error&) {
            fail("bad fixed yaw '" + mode + "'");
        }
    } else if (mode == "sequence") {
        YawSequence seq;
        if (!j.contains("yaw_sequence") || !j["yaw_sequence"].is_array())
            fail("'yaw_sequence' must be a list when yaw_mode is 'sequence'");
        for (const auto& e : j["yaw_sequence"])
            seq.targets.push_back({number(e, "t"), deg_to_rad(number(e, "yaw_deg"))});
        spec.yaw_mode = seq;
    } else {
        fail("unknown yaw_mode '" + mode + "'");
    }
    return spec;
}

json trajectory_to_json(const TrajectorySpec& spec)
{
    json j;
    j["waypoints"] = json::array();
    for (const auto& w : spec.waypoints) {
        json wp;
        wp["xyz"] = {w.position.x, w.position.y, w.position.z};
        if (w.hold_yaw)
            wp["hold_yaw_deg"] = rad_to_deg(*w.hold_yaw);
        j["waypoints"].push_back(wp);
    }
    j["v_max"] = spec.v_max;
    j["a_max"] = spec.a_max;
    j["yaw_rate_max_dps"] = rad_to_deg(spec.yaw_rate_max);
    if (spec.initial_yaw)
        j["initial_yaw_deg"] = rad_to_deg(*spec.initial_yaw);
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, PathFacing>) {
                j["yaw_mode"] = "path_facing";
            } else if constexpr (std::is_same_v<M, FixedYaw>) {
                j["yaw_mode"] = "fixed:" + std::to_string(rad_to_deg(m.yaw));
            } else {
                j["yaw_mode"] = "sequence";
                j["yaw_sequence"] = json::array();
                for (const auto& t : m.targets)
                    j["yaw_sequence"].push_back({{"t", t.t}, {"yaw_deg", rad_to_deg(t.yaw)}});
            }
        },
        spec.yaw_mode);
    return j;
}

Command command_from_json(const json& j, const FormationLibrary& library)
{
    const std::string type = type_of(j);
    if (type == "start_trajectory") {
        if (!j.contains("trajectory"))
            fail("start_trajectory needs 'trajectory'");
        return cmd::StartTrajectory{trajectory_from_json(j["trajectory"])};
    }
    if (type == "morph") {
        if (!j.contains("formation"))
            fail("morph needs 'formation'");
        const double duration = number_or(j, "duration", 1.5);
        const auto& f = j["formation"];
        if (f.is_string()) {
            auto it = library.find(f.get<std::string>());
            if (it == library.end())
                throw Error(ErrorKind::UnknownFormation, "unknown formation '" + f.get<std::string>() + "'");
            return cmd::Morph{it->second, duration};
        }
        return cmd::Morph{formation_from_json(f), duration};
    }
    if (type == "detach")
        return cmd::Detach{integer(j, "agent_id")};
    if (type == "attach") {
        Vec3 rpy;
        if (j.contains("rpy_deg"))
            rpy = vec3(j["rpy_deg"], "rpy_deg");
        if (!j.contains("xyz"))
            fail("attach needs 'xyz'");
        const Pose offset{UnitQuaternion::from_rpy(deg_to_rad(rpy.x), deg_to_rad(rpy.y), deg_to_rad(rpy.z)),
                          vec3(j["xyz"], "xyz")};
        return cmd::Attach{integer(j, "agent_id"), offset};
    }
    if (type == "pause")
        return cmd::Pause{};
    if (type == "resume")
        return cmd::Resume{};
    if (type == "set_speed")
        return cmd::SetSpeed{number(j, "v_max")};
    fail("unknown command type '" + type + "'");
}

json command_to_json(const Command& command)
{
    json j;
    std::visit(
        [&](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, cmd::StartTrajectory>) {
                j["type"] = "start_trajectory";
                j["trajectory"] = trajectory_to_json(c.spec);
            } else if constexpr (std::is_same_v<C, cmd::Morph>) {
                j["type"] = "morph";
                j["formation"] = formation_to_json(c.target);
                j["duration"] = c.duration;
            } else if constexpr (std::is_same_v<C, cmd::Detach>) {
                j["type"] = "detach";
                j["agent_id"] = c.agent_id;
            } else if constexpr (std::is_same_v<C, cmd::Attach>) {
                j["type"] = "attach";
                j["agent_id"] = c.agent_id;
                const auto& t = c.offset.translation;
                j["xyz"] = {t.x, t.y, t.z};
            } else if constexpr (std::is_same_v<C, cmd::Pause>) {
                j["type"] = "pause";
            } else if constexpr (std::is_same_v<C, cmd::Resume>) {
                j["type"] = "resume";
            } else {
                j["type"] = "set_speed";
                j["v_max"] = c.v_max;
            }
        },
        command);
    return j;
}

} // namespace flocking
