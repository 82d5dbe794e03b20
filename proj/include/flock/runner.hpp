#pragma once

#include "flock/engine.hpp"
#include "flock/metrics.hpp"
#include "flock/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace flocking {

struct RunOptions {
    std::optional<std::filesystem::path> out_dir; // no files written when empty
    bool realtime = false;
    std::optional<AgentModel::Mode> model;
    std::optional<double> v_max;
    std::optional<double> dt;
    std::optional<std::uint64_t> seed;
    // Called once the engine exists and before setup starts.
    std::function<void(Engine&)> on_engine;
    // Called before the engine is destroyed, also when the run throws.
    std::function<void(Engine&)> on_finish;
    // Called after every tick with the new state.
    std::function<void(const SwarmState&)> on_tick;
};

struct CommandOutcome {
    double t = 0.0;
    std::string command;
    bool accepted = false;
    std::string reason;
    std::string message;
};

struct RunResult {
    std::string scenario;
    double t_motion_start = 0.0; // first motion-phase sample
    double t_end = 0.0;          // last motion-phase sample
    std::size_t setup_ticks = 0;
    std::size_t ticks = 0;
    std::vector<CommandOutcome> commands;
    std::vector<EngineEvent> events;
    std::vector<Observation> observations; // every published state, in order
    MetricsReport report;

    bool any_rejected() const;
};

// Positions the agents, runs setup, starts the trajectory and fires the
// scenario events until the run ends. Throws SetupConflict, IoError.
RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {});

// Initial agent positions after defaults and seeded jitter.
std::vector<Vec3> initial_positions(const Scenario& scenario, AgentModel::Mode mode, std::uint64_t seed);

Thresholds scenario_thresholds(const Scenario& scenario);

// Metrics over motion-phase observations. Window defaults to the
// steady-state window of the motion span. Throws EmptyWindow.
MetricsReport metrics_from_observations(const std::vector<Observation>& observations, const Thresholds& thresholds,
                                        const std::optional<Window>& window = std::nullopt);

void write_metrics_csv(std::ostream& out, const MetricsReport& report);

} // namespace flocking
