#pragma once

#include "flock/commands_json.hpp"
#include "flock/engine.hpp"
#include "flock/metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flocking {

struct AgentsSpec {
    int count = 0;
    AgentModel model;
    // Empty: each agent starts on the ground (z = 0) below its slot.
    std::vector<Vec3> initial_positions;
    std::vector<double> initial_yaws; // rad
    double jitter = 0.02;             // m, lagged mode only, seeded
    std::optional<double> setup_speed; // m/s; defaults to the trajectory v_max
};

struct EngineSpec {
    double dt = 0.01;
    std::uint64_t seed = 1;
    double tail = 1.0;               // s of idle recorded after the last activity
    std::optional<double> duration;  // s of simulated time after motion starts
};

struct ScenarioEvent {
    double t = 0.0; // s after motion starts
    Command command;
    nlohmann::json source;
};

struct MetricsSpec {
    std::optional<double> d_max; // defaults to the formation's largest slot norm
    std::optional<double> d_min; // defaults to the formation's d_min
    double delta = 0.15;
    std::optional<Window> window; // absolute times; default steady-state window otherwise
};

struct Scenario {
    std::string name;
    std::string description;
    FormationSpec formation;
    FormationLibrary formations;
    TrajectorySpec trajectory;
    AgentsSpec agents;
    EngineSpec engine;
    std::vector<ScenarioEvent> events;
    MetricsSpec metrics;
    nlohmann::json document; // descriptor served to operator consoles
};

// Throws ParseError, ConstraintViolation (formation constraints) or IoError
// (missing formation file). Relative formation file paths resolve against
// base_dir.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

// Built-in scenarios.
std::vector<std::string> preset_names();
std::optional<std::string> preset_document(std::string_view name);
Scenario load_preset(std::string_view name);

// Preset name or file path.
Scenario resolve_scenario(const std::string& name_or_path);

} // namespace flocking
