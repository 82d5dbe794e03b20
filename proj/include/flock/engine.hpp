#pragma once

#include "flock/formation.hpp"
#include "flock/pose.hpp"
#include "flock/trajectory.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flocking {

struct AgentModel {
    enum class Mode { Ideal, Lagged };

    Mode mode = Mode::Lagged;
    double k = 2.0;              // 1/s, lagged only
    double v_max_agent = 3.0;    // m/s
    double yaw_rate_max = 1.5;   // rad/s, setup slew and lagged yaw
};

enum class Phase { Setup, Motion, Idle };
std::string_view to_string(Phase phase);

struct AgentState {
    int agent_id = 0;
    std::optional<int> slot_id;    // empty once detached
    Vec3 position;                 // world, m
    Vec3 velocity;                 // world, m/s
    double yaw = 0.0;              // rad, wrapped
    std::optional<Pose> reference; // P_i^W(t); empty while detached
    bool joining = false;          // flying to a slot after attach

    bool detached() const { return !slot_id.has_value(); }
};

struct SwarmState {
    std::uint64_t tick = 0;
    double t = 0.0;
    Phase phase = Phase::Setup;
    TrajectorySample vc;
    FormationSpec formation;                       // current shape (interpolated while morphing)
    std::optional<FormationTransition> transition; // active morph, if any
    std::vector<AgentState> agents;
};

namespace cmd {
struct StartTrajectory {
    TrajectorySpec spec;
};
struct Morph {
    FormationSpec target;
    double duration = 1.5; // s
};
struct Detach {
    int agent_id = 0;
};
struct Attach {
    int agent_id = 0;
    Pose offset;
};
struct Pause {};
struct Resume {};
struct SetSpeed {
    double v_max = 0.0;
};
} // namespace cmd

using Command = std::variant<cmd::StartTrajectory, cmd::Morph, cmd::Detach, cmd::Attach, cmd::Pause, cmd::Resume,
                             cmd::SetSpeed>;

std::string describe(const Command& command);

struct CommandResult {
    bool accepted = false;
    std::string reason;  // error kind name when rejected
    std::string message;
};

struct EngineEvent {
    double t = 0.0;
    std::string text;
};

struct EngineConfig {
    double dt = 0.01;              // s
    AgentModel model;
    double pos_tolerance = 0.05;   // m, setup completion and joining
    double yaw_tolerance = 0.05;   // rad, setup completion
};

// Agent index -> slot id.
using Assignment = std::vector<int>;

// Bijection of agents onto slots minimizing the summed straight-line distance
// from each agent to its slot's world position. Throws CountMismatch.
Assignment assign_slots(const std::vector<Vec3>& initial_positions, const FormationSpec& formation,
                        const Pose& vc_pose);

// Fixed-step swarm simulation. One thread drives tick()/apply(); enqueue()
// and snapshot() may be called from any thread.
class Engine {
public:
    Engine(EngineConfig config, FormationSpec formation, std::vector<Vec3> initial_positions,
           std::vector<double> initial_yaws, const Pose& vc_pose);
    // Queued commands that never reached a tick boundary are answered as
    // rejected.
    ~Engine();
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    const SwarmState& state() const { return state_; }
    const EngineConfig& config() const { return config_; }

    // Latest published state; refreshed after every tick and command.
    std::shared_ptr<const SwarmState> snapshot() const;
    using SnapshotListener = std::function<void(std::shared_ptr<const SwarmState>)>;
    void set_snapshot_listener(SnapshotListener listener);

    // Validates the straight-line approach (SetupConflict) and installs the
    // setup targets without advancing time.
    void begin_setup(const Assignment& assignment, double v_max);
    // Ticks until every agent is within tolerance of its slot; returns the
    // number of ticks taken. on_tick observes each intermediate state.
    std::size_t run_setup(const Assignment& assignment, double v_max,
                          const std::function<void(const SwarmState&)>& on_tick = {});
    bool setup_complete() const;

    void tick();

    // Applies a command immediately; throws flocking::Error when it is rejected.
    void apply(const Command& command);
    // Queues a command for the next tick boundary.
    void enqueue(Command command, std::function<void(const CommandResult&)> done = {});
    // Rejects everything still queued.
    void cancel_pending(const std::string& message);

    std::vector<EngineEvent> take_events();

    bool trajectory_active() const { return trajectory_.has_value() && !trajectory_done_; }
    bool paused() const { return paused_; }
    const std::optional<PlannedTrajectory>& trajectory() const { return trajectory_; }
    // Formation the swarm is heading to (target of an active morph).
    const FormationSpec& base_formation() const { return formation_; }

private:
    struct Pending {
        Command command;
        std::function<void(const CommandResult&)> done;
    };

    void apply_start(const cmd::StartTrajectory& c);
    void apply_morph(const cmd::Morph& c);
    void apply_detach(const cmd::Detach& c);
    void apply_attach(const cmd::Attach& c);
    void apply_set_speed(const cmd::SetSpeed& c);

    void drain_queue();
    void setup_step();
    void motion_step(double t_next);
    void refresh_references(double t);
    AgentState& agent(int agent_id);
    void publish();
    void log(std::string text);

    EngineConfig config_;
    SwarmState state_;
    FormationSpec formation_;
    std::optional<PlannedTrajectory> trajectory_;
    double clock_ = 0.0;
    bool trajectory_done_ = false;
    bool paused_ = false;
    double setup_speed_ = 0.0;
    bool setup_installed_ = false;

    std::vector<EngineEvent> events_;

    mutable std::mutex queue_mutex_;
    std::deque<Pending> queue_;

    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const SwarmState> published_;
    SnapshotListener listener_;
};

} // namespace flocking
