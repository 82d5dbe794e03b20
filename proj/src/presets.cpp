#include "flock/scenario.hpp"

#include <cmath>
#include <functional>
#include <map>

namespace flocking {

using nlohmann::json;

namespace {

json xyz(double x, double y, double z) { return json::array({x, y, z}); }

json lagged_agents(int count)
{
    return {{"count", count}, {"model", "lagged"}, {"k", 2.0}, {"v_max_agent", 3.0}, {"yaw_rate_max_dps", 90.0},
            {"jitter", 0.02}};
}

// Equilateral triangle of side 2 m, the reconfiguration target.
json triangle() { return {{"name", "triangle"}, {"shape", "regular"}, {"n", 3}, {"side", 2.0}, {"d_min", 1.0}}; }

// A 2 m side and 1.414 m from the centroid cannot both hold for an
// equilateral triangle, so this one is isosceles: drone0 1.414 m ahead,
// drones 1 and 2 behind and 2 m apart, about 2.25 m from drone0.
json flight_triangle()
{
    auto slot = [](int id, double x, double y) { return json{{"id", id}, {"xyz", xyz(x, y, 0)}}; };
    return {{"name", "triangle-1414"},
            {"d_min", 1.0},
            {"slots", json::array({slot(0, 1.414, 0.0), slot(1, -0.6, 1.0), slot(2, -0.6, -1.0)})}};
}

json linear_3()
{
    return {
        {"name", "linear-3"},
        {"description", "Three agents in a triangle (one 1.414 m ahead, two behind 2 m apart) fly a 15 m "
                        "straight line at 0.5 m/s."},
        {"formation", flight_triangle()},
        {"trajectory",
         {{"waypoints", json::array({xyz(0, 0, 1), xyz(15, 0, 1)})},
          {"v_max", 0.5},
          {"a_max", 1.0},
          {"yaw_mode", "path_facing"},
          {"yaw_rate_max_dps", 45.0}}},
        {"agents", lagged_agents(3)},
        {"engine", {{"dt", 0.01}, {"seed", 1}, {"tail", 1.0}}},
        {"metrics", {{"delta", 0.15}}},
    };
}

// 20 m: 5 m straight, a 90 degree left arc of length 10 m, 5 m straight.
json curve_3()
{
    const double r = 10.0 / (kPi / 2.0);
    json wps = json::array({xyz(0, 0, 1), xyz(2.5, 0, 1), xyz(5, 0, 1)});
    for (int deg = 15; deg <= 90; deg += 15) {
        const double a = deg_to_rad(deg);
        wps.push_back(xyz(5.0 + r * std::sin(a), r - r * std::cos(a), 1.0));
    }
    wps.push_back(xyz(5.0 + r, r + 2.5, 1));
    wps.push_back(xyz(5.0 + r, r + 5.0, 1));
    return {
        {"name", "curve-3"},
        {"description", "Three agents in the linear-3 triangle fly a 20 m path with one 90 degree left turn."},
        {"formation", flight_triangle()},
        {"trajectory",
         {{"waypoints", wps}, {"v_max", 0.5}, {"a_max", 1.0}, {"yaw_mode", "path_facing"}, {"yaw_rate_max_dps", 45.0}}},
        {"agents", lagged_agents(3)},
        {"engine", {{"dt", 0.01}, {"seed", 1}, {"tail", 1.0}}},
        {"metrics", {{"delta", 0.15}}},
    };
}

json reconfig_4to3()
{
    json agents = lagged_agents(4);
    // Agent 3 starts under the rear-right corner so that, once detached and
    // hovering, the swarm flies away from it.
    agents["initial_positions"] = json::array({xyz(1, 1, 0), xyz(-1, 1, 0), xyz(1, -1, 0), xyz(-1, -1, 0)});
    return {
        {"name", "reconfig-4to3"},
        {"description", "A 2 m square of four agents loses agent 3 at t = 10 s and morphs into a 2 m triangle "
                        "over 1.5 s while following a 15 m line."},
        {"formation", {{"name", "square"}, {"shape", "square"}, {"side", 2.0}, {"d_min", 1.0}}},
        {"formations", {{"triangle", triangle()}}},
        {"trajectory",
         {{"waypoints", json::array({xyz(0, 0, 1), xyz(15, 0, 1)})},
          {"v_max", 0.5},
          {"a_max", 1.0},
          {"yaw_mode", "path_facing"},
          {"yaw_rate_max_dps", 45.0}}},
        {"agents", agents},
        {"engine", {{"dt", 0.01}, {"seed", 1}, {"tail", 1.0}}},
        {"events",
         json::array({{{"t", 10.0}, {"command", {{"type", "detach"}, {"agent_id", 3}}}},
                      {{"t", 10.0}, {"command", {{"type", "morph"}, {"formation", "triangle"}, {"duration", 1.5}}}}})},
        {"metrics", {{"delta", 0.15}}},
    };
}

// Stand-in for the twelve-agent flight: a 3 m ring on a lemniscate that
// climbs and descends once per lobe.
json scale_12()
{
    const double a = 10.0;
    const int n = 32;
    json wps = json::array();
    for (int k = 0; k <= n; ++k) {
        const double th = 2.0 * kPi * (k % n) / n;
        const double s = std::sin(th);
        const double c = std::cos(th);
        const double den = 1.0 + s * s;
        wps.push_back(xyz(a * c / den, a * s * c / den, 3.0 + 1.0 * s));
    }
    return {
        {"name", "scale-12"},
        {"description", "Twelve agents on a 3 m regular ring follow a 3D lemniscate for 60 s."},
        {"formation", {{"name", "ring-12"}, {"shape", "regular"}, {"n", 12}, {"radius", 3.0}, {"d_min", 1.0}}},
        {"trajectory",
         {{"waypoints", wps}, {"v_max", 0.8}, {"a_max", 1.0}, {"yaw_mode", "path_facing"}, {"yaw_rate_max_dps", 45.0}}},
        {"agents", lagged_agents(12)},
        {"engine", {{"dt", 0.01}, {"seed", 1}, {"tail", 0.0}, {"duration", 60.0}}},
        {"metrics", {{"delta", 0.15}}},
    };
}

json line_2()
{
    return {
        {"name", "line-2"},
        {"description", "Two agents 1 m apart turn from 90 degrees to face a 3 m straight path while flying it."},
        {"formation", {{"name", "line-2"}, {"shape", "line"}, {"n", 2}, {"spacing", 1.0}, {"d_min", 0.5}}},
        {"trajectory",
         {{"waypoints", json::array({xyz(0, 0, 1), xyz(3, 0, 1)})},
          {"v_max", 0.5},
          {"a_max", 1.0},
          {"yaw_mode", "path_facing"},
          {"yaw_rate_max_dps", 30.0},
          {"initial_yaw_deg", 90.0}}},
        {"agents", lagged_agents(2)},
        {"engine", {{"dt", 0.01}, {"seed", 1}, {"tail", 1.0}}},
        {"metrics", {{"delta", 0.15}}},
    };
}

json rotate_3()
{
    return {
        {"name", "rotate-3"},
        {"description", "Three agents in a 1 m spaced line rotate 120 degrees counterclockwise, then 90 degrees "
                        "clockwise, in place."},
        {"formation", {{"name", "line-3"}, {"shape", "line"}, {"n", 3}, {"spacing", 1.0}, {"d_min", 0.5}}},
        {"trajectory",
         {{"waypoints", json::array({xyz(0, 0, 1)})},
          {"v_max", 0.5},
          {"a_max", 1.0},
          {"yaw_mode", "sequence"},
          {"yaw_sequence", json::array({{{"t", 1.0}, {"yaw_deg", 120.0}}, {{"t", 6.0}, {"yaw_deg", 30.0}}})},
          {"yaw_rate_max_dps", 30.0}}},
        {"agents", lagged_agents(3)},
        {"engine", {{"dt", 0.01}, {"seed", 1}, {"tail", 1.0}}},
        {"metrics", {{"delta", 0.15}}},
    };
}

const std::vector<std::pair<std::string, std::function<json()>>>& registry()
{
    static const std::vector<std::pair<std::string, std::function<json()>>> presets = {
        {"linear-3", linear_3}, {"curve-3", curve_3}, {"reconfig-4to3", reconfig_4to3},
        {"scale-12", scale_12}, {"line-2", line_2},   {"rotate-3", rotate_3},
    };
    return presets;
}

} // namespace

std::vector<std::string> preset_names()
{
    std::vector<std::string> names;
    for (const auto& [name, make] : registry())
        names.push_back(name);
    return names;
}

std::optional<std::string> preset_document(std::string_view name)
{
    for (const auto& [n, make] : registry())
        if (n == name)
            return make().dump(2);
    return std::nullopt;
}

} // namespace flocking
