#include "flock/engine.hpp"

#include "flock/assignment.hpp"
#include "flock/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace flocking {

std::string_view to_string(Phase phase)
{
    switch (phase) {
    case Phase::Setup: return "setup";
    case Phase::Motion: return "motion";
    case Phase::Idle: return "idle";
    }
    return "unknown";
}

std::string describe(const Command& command)
{
    std::ostringstream os;
    std::visit(
        [&](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, cmd::StartTrajectory>)
                os << "start_trajectory(" << c.spec.waypoints.size() << " waypoints, v_max " << c.spec.v_max << ")";
            else if constexpr (std::is_same_v<C, cmd::Morph>)
                os << "morph(" << c.target.name() << ", " << c.target.size() << " slots, " << c.duration << " s)";
            else if constexpr (std::is_same_v<C, cmd::Detach>)
                os << "detach(agent " << c.agent_id << ")";
            else if constexpr (std::is_same_v<C, cmd::Attach>)
                os << "attach(agent " << c.agent_id << ")";
            else if constexpr (std::is_same_v<C, cmd::Pause>)
                os << "pause";
            else if constexpr (std::is_same_v<C, cmd::Resume>)
                os << "resume";
            else
                os << "set_speed(" << c.v_max << ")";
        },
        command);
    return os.str();
}

Assignment assign_slots(const std::vector<Vec3>& initial_positions, const FormationSpec& formation,
                        const Pose& vc_pose)
{
    if (initial_positions.size() != formation.size())
        throw Error(ErrorKind::CountMismatch, std::to_string(initial_positions.size()) + " agents for " +
                                                  std::to_string(formation.size()) + " slots");
    const std::size_t n = initial_positions.size();
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cost[i][j] = distance(initial_positions[i],
                                  transform_point(vc_pose, formation.slots()[j].offset.translation));
    return min_cost_assignment(cost);
}

namespace {

Vec3 clamp_norm(const Vec3& v, double limit)
{
    const double n = v.norm();
    return n > limit ? v * (limit / n) : v;
}

// Smallest distance between two agents moving in straight lines at speed v
// from a_i to b_i, each stopping on arrival.
double closest_approach(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1, double v)
{
    const double ta = distance(a0, a1) / v;
    const double tb = distance(b0, b1) / v;
    const Vec3 va = ta > 0.0 ? (a1 - a0) / ta : Vec3{};
    const Vec3 vb = tb > 0.0 ? (b1 - b0) / tb : Vec3{};
    auto pos = [&](double t) {
        const Vec3 pa = t >= ta ? a1 : a0 + va * t;
        const Vec3 pb = t >= tb ? b1 : b0 + vb * t;
        return pa - pb;
    };
    double breaks[3] = {0.0, std::min(ta, tb), std::max(ta, tb)};
    double best = pos(0.0).norm();
    for (int k = 0; k < 2; ++k) {
        const double t0 = breaks[k], t1 = breaks[k + 1];
        if (t1 <= t0)
            continue;
        const Vec3 r0 = pos(t0);
        const Vec3 w = (pos(t1) - r0) / (t1 - t0);
        const double ww = dot(w, w);
        double tau = ww > 0.0 ? std::clamp(-dot(r0, w) / ww, 0.0, t1 - t0) : 0.0;
        best = std::min({best, (r0 + w * tau).norm(), pos(t1).norm()});
    }
    return best;
}

} // namespace

Engine::Engine(EngineConfig config, FormationSpec formation, std::vector<Vec3> initial_positions,
               std::vector<double> initial_yaws, const Pose& vc_pose)
    : config_(config),
      state_{0, 0.0, Phase::Setup, TrajectorySample{0.0, vc_pose, {}}, formation, std::nullopt, {}},
      formation_(std::move(formation))
{
    if (!(config_.dt > 0.0))
        throw Error(ErrorKind::ConstraintViolation, "dt must be positive");
    if (!(config_.model.v_max_agent > 0.0) || !(config_.model.yaw_rate_max > 0.0) ||
        (config_.model.mode == AgentModel::Mode::Lagged && !(config_.model.k > 0.0)))
        throw Error(ErrorKind::ConstraintViolation, "agent model gains and limits must be positive");
    if (!initial_yaws.empty() && initial_yaws.size() != initial_positions.size())
        throw Error(ErrorKind::CountMismatch, "initial yaw count differs from agent count");
    for (std::size_t i = 0; i < initial_positions.size(); ++i) {
        AgentState a;
        a.agent_id = static_cast<int>(i);
        a.position = initial_positions[i];
        a.yaw = initial_yaws.empty() ? 0.0 : wrap_angle(initial_yaws[i]);
        state_.agents.push_back(a);
    }
    publish();
}

Engine::~Engine() { cancel_pending("engine stopped"); }

void Engine::cancel_pending(const std::string& message)
{
    std::deque<Pending> batch;
    {
        std::lock_guard lock(queue_mutex_);
        batch.swap(queue_);
    }
    for (auto& p : batch)
        if (p.done)
            p.done({false, std::string(to_string(ErrorKind::ConstraintViolation)), message});
}

std::shared_ptr<const SwarmState> Engine::snapshot() const
{
    std::lock_guard lock(snapshot_mutex_);
    return published_;
}

void Engine::set_snapshot_listener(SnapshotListener listener)
{
    std::lock_guard lock(snapshot_mutex_);
    listener_ = std::move(listener);
}

void Engine::publish()
{
    auto snap = std::make_shared<const SwarmState>(state_);
    SnapshotListener listener;
    {
        std::lock_guard lock(snapshot_mutex_);
        published_ = snap;
        listener = listener_;
    }
    if (listener)
        listener(std::move(snap));
}

void Engine::log(std::string text) { events_.push_back({state_.t, std::move(text)}); }

std::vector<EngineEvent> Engine::take_events() { return std::exchange(events_, {}); }

AgentState& Engine::agent(int agent_id)
{
    if (agent_id < 0 || static_cast<std::size_t>(agent_id) >= state_.agents.size())
        throw Error(ErrorKind::UnknownAgent, "no agent with id " + std::to_string(agent_id));
    return state_.agents[static_cast<std::size_t>(agent_id)];
}

void Engine::begin_setup(const Assignment& assignment, double v_max)
{
    if (state_.phase != Phase::Setup)
        throw Error(ErrorKind::ConstraintViolation, "setup already finished");
    if (assignment.size() != state_.agents.size() || assignment.size() != formation_.size())
        throw Error(ErrorKind::CountMismatch, "assignment must cover every agent and slot exactly once");
    if (!(v_max > 0.0))
        throw Error(ErrorKind::ConstraintViolation, "setup speed must be positive");
    std::vector<bool> used(formation_.size(), false);
    for (int slot : assignment) {
        if (!formation_.has_slot(slot) || used[static_cast<std::size_t>(slot)])
            throw Error(ErrorKind::CountMismatch, "assignment is not a bijection onto the slots");
        used[static_cast<std::size_t>(slot)] = true;
    }

    std::vector<Vec3> targets;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        targets.push_back(transform_point(state_.vc.pose, formation_.slot(assignment[i]).offset.translation));
    for (std::size_t i = 0; i < targets.size(); ++i) {
        for (std::size_t j = i + 1; j < targets.size(); ++j) {
            const double d = closest_approach(state_.agents[i].position, targets[i], state_.agents[j].position,
                                              targets[j], v_max);
            if (d < formation_.d_min() - kLengthTolerance) {
                std::ostringstream os;
                os << "agents " << i << " and " << j << " come within " << d << " m of each other during setup"
                   << " (d_min " << formation_.d_min() << " m)";
                throw Error(ErrorKind::SetupConflict, os.str());
            }
        }
    }

    for (std::size_t i = 0; i < assignment.size(); ++i)
        state_.agents[i].slot_id = assignment[i];
    setup_speed_ = v_max;
    setup_installed_ = true;
    refresh_references(state_.t);
    publish();
}

bool Engine::setup_complete() const
{
    for (const auto& a : state_.agents) {
        if (a.detached() || !a.reference)
            continue;
        if (distance(a.position, a.reference->translation) > config_.pos_tolerance)
            return false;
        if (std::abs(wrap_angle(a.reference->rotation.yaw() - a.yaw)) > config_.yaw_tolerance)
            return false;
    }
    return true;
}

std::size_t Engine::run_setup(const Assignment& assignment, double v_max,
                              const std::function<void(const SwarmState&)>& on_tick)
{
    begin_setup(assignment, v_max);
    std::size_t ticks = 0;
    constexpr std::size_t kGuard = 10'000'000;
    while (state_.phase == Phase::Setup) {
        if (setup_complete()) {
            state_.phase = Phase::Idle;
            log("setup complete");
            publish();
            break;
        }
        if (ticks >= kGuard)
            throw Error(ErrorKind::SetupConflict, "setup did not converge");
        tick();
        ++ticks;
        if (on_tick)
            on_tick(state_);
    }
    return ticks;
}

void Engine::refresh_references(double t)
{
    FormationSpec shape = formation_;
    const FormationTransition* tr = state_.transition ? &*state_.transition : nullptr;
    if (tr)
        shape = interpolate(*tr, std::clamp(t, tr->start_time(), tr->end_time()));

    const Pose& vc = state_.vc.pose;
    for (auto& a : state_.agents) {
        if (a.detached()) {
            a.reference.reset();
            continue;
        }
        a.reference = compose(vc, shape.slot(*a.slot_id).offset);
    }
    state_.formation = std::move(shape);
}

void Engine::setup_step()
{
    const double dt = config_.dt;
    for (auto& a : state_.agents) {
        if (!a.reference)
            continue;
        const Vec3 err = a.reference->translation - a.position;
        const double d = err.norm();
        const double step = std::min(setup_speed_ * dt, d);
        const Vec3 move = d > 0.0 ? err * (step / d) : Vec3{};
        a.position += move;
        a.velocity = move / dt;
        const double yaw_err = wrap_angle(a.reference->rotation.yaw() - a.yaw);
        const double yaw_step = std::clamp(yaw_err, -config_.model.yaw_rate_max * dt, config_.model.yaw_rate_max * dt);
        a.yaw = wrap_angle(a.yaw + yaw_step);
    }
}

void Engine::motion_step(double t_next)
{
    const double dt = config_.dt;

    if (state_.phase == Phase::Motion && trajectory_ && !paused_) {
        clock_ += dt;
        state_.vc = trajectory_->sample(clock_);
        if (clock_ >= trajectory_->duration()) {
            trajectory_done_ = true;
            state_.phase = Phase::Idle;
            log("trajectory complete");
        }
    } else {
        state_.vc.twist = {};
    }
    state_.vc.t = t_next;

    if (state_.transition && t_next >= state_.transition->end_time() - 1e-9) {
        state_.transition.reset();
        log("morph complete: formation '" + formation_.name() + "' with " + std::to_string(formation_.size()) +
            " slots");
    }
    refresh_references(t_next);

    const FormationTransition* tr = state_.transition ? &*state_.transition : nullptr;
    const Vec3 omega = state_.vc.twist.angular;
    const Pose& vc = state_.vc.pose;
    const AgentModel& model = config_.model;

    for (auto& a : state_.agents) {
        if (a.detached()) {
            a.velocity = {};
            continue;
        }
        const Pose& ref = *a.reference;
        const double ref_yaw = ref.rotation.yaw();

        if (a.joining) {
            const Vec3 err = ref.translation - a.position;
            const double d = err.norm();
            if (d <= config_.pos_tolerance) {
                a.joining = false;
                log("agent " + std::to_string(a.agent_id) + " joined slot " + std::to_string(*a.slot_id));
            } else {
                const double speed = std::min(model.v_max_agent, d / dt);
                a.velocity = err * (speed / d);
                a.position += a.velocity * dt;
                const double yaw_step = std::clamp(wrap_angle(ref_yaw - a.yaw), -model.yaw_rate_max * dt,
                                                   model.yaw_rate_max * dt);
                a.yaw = wrap_angle(a.yaw + yaw_step);
                continue;
            }
        }

        if (model.mode == AgentModel::Mode::Ideal) {
            const Vec3 lever = ref.translation - vc.translation;
            Vec3 vel = state_.vc.twist.linear + cross(omega, lever);
            if (tr)
                vel += vc.rotation.rotate(tr->translation_rate(*a.slot_id));
            a.position = ref.translation;
            a.velocity = vel;
            a.yaw = wrap_angle(ref_yaw);
        } else {
            a.velocity = clamp_norm((ref.translation - a.position) * model.k, model.v_max_agent);
            a.position += a.velocity * dt;
            const double yaw_rate =
                std::clamp(model.k * wrap_angle(ref_yaw - a.yaw), -model.yaw_rate_max, model.yaw_rate_max);
            a.yaw = wrap_angle(a.yaw + yaw_rate * dt);
        }
    }
}

void Engine::tick()
{
    drain_queue();
    const std::uint64_t next_tick = state_.tick + 1;
    const double t_next = static_cast<double>(next_tick) * config_.dt;

    // Advance the clock first so events logged during the step carry t_next.
    state_.tick = next_tick;
    state_.t = t_next;
    if (state_.phase == Phase::Setup) {
        state_.vc.t = t_next;
        if (setup_installed_)
            setup_step();
    } else {
        motion_step(t_next);
    }
    publish();
}

void Engine::drain_queue()
{
    std::deque<Pending> batch;
    {
        std::lock_guard lock(queue_mutex_);
        batch.swap(queue_);
    }
    for (auto& p : batch) {
        CommandResult result;
        try {
            apply(p.command);
            result.accepted = true;
        } catch (const Error& e) {
            result.reason = std::string(to_string(e.kind()));
            result.message = e.what();
        }
        if (p.done)
            p.done(result);
    }
}

void Engine::enqueue(Command command, std::function<void(const CommandResult&)> done)
{
    std::lock_guard lock(queue_mutex_);
    queue_.push_back({std::move(command), std::move(done)});
}

void Engine::apply(const Command& command)
{
    std::visit(
        [this](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, cmd::StartTrajectory>) {
                apply_start(c);
            } else if constexpr (std::is_same_v<C, cmd::Morph>) {
                apply_morph(c);
            } else if constexpr (std::is_same_v<C, cmd::Detach>) {
                apply_detach(c);
            } else if constexpr (std::is_same_v<C, cmd::Attach>) {
                apply_attach(c);
            } else if constexpr (std::is_same_v<C, cmd::Pause>) {
                if (state_.phase != Phase::Motion)
                    throw Error(ErrorKind::ConstraintViolation, "pause requires an active trajectory");
                paused_ = true;
                state_.phase = Phase::Idle;
                state_.vc.twist = {};
                log("paused");
            } else if constexpr (std::is_same_v<C, cmd::Resume>) {
                if (!paused_)
                    throw Error(ErrorKind::ConstraintViolation, "resume requires a paused trajectory");
                paused_ = false;
                state_.phase = Phase::Motion;
                log("resumed");
            } else {
                apply_set_speed(c);
            }
        },
        command);
    publish();
}

void Engine::apply_start(const cmd::StartTrajectory& c)
{
    if (state_.phase == Phase::Setup)
        throw Error(ErrorKind::ConstraintViolation, "setup still in progress");
    if (trajectory_active())
        throw Error(ErrorKind::ConstraintViolation, "a trajectory is already active");
    if (c.spec.v_max > config_.model.v_max_agent)
        throw Error(ErrorKind::ConstraintViolation, "trajectory v_max exceeds the agents' maximum speed");

    TrajectorySpec spec = c.spec;
    const Vec3 here = state_.vc.pose.translation;
    if (spec.waypoints.empty() || distance(spec.waypoints.front().position, here) > 1e-6)
        spec.waypoints.insert(spec.waypoints.begin(), Waypoint{here, std::nullopt});
    if (!spec.initial_yaw)
        spec.initial_yaw = state_.vc.pose.rotation.yaw();

    trajectory_ = plan(spec);
    clock_ = 0.0;
    trajectory_done_ = false;
    paused_ = false;
    state_.phase = Phase::Motion;
    log("trajectory started: " + std::to_string(trajectory_->length()) + " m over " +
        std::to_string(trajectory_->duration()) + " s");
}

void Engine::apply_morph(const cmd::Morph& c)
{
    if (state_.phase == Phase::Setup)
        throw Error(ErrorKind::ConstraintViolation, "setup still in progress");
    std::size_t slotted = 0;
    for (const auto& a : state_.agents)
        if (!a.detached())
            ++slotted;
    if (c.target.size() != slotted)
        throw Error(ErrorKind::CountMismatch, "target formation has " + std::to_string(c.target.size()) +
                                                  " slots for " + std::to_string(slotted) + " slotted agents");

    const FormationSpec current = state_.formation;
    const SlotMapping mapping = match_slots(current, c.target);
    FormationTransition tr(current, c.target, state_.t, c.duration, mapping);

    for (auto& a : state_.agents)
        if (a.slot_id)
            a.slot_id = mapping.at(*a.slot_id);
    formation_ = c.target;
    state_.transition = std::move(tr);
    refresh_references(state_.t);
    log("morph started: '" + c.target.name() + "' over " + std::to_string(c.duration) + " s");
}

void Engine::apply_detach(const cmd::Detach& c)
{
    AgentState& a = agent(c.agent_id);
    if (a.detached())
        throw Error(ErrorKind::ConstraintViolation, "agent " + std::to_string(c.agent_id) + " is already detached");
    if (state_.transition)
        throw Error(ErrorKind::ConstraintViolation, "cannot detach while a formation transition is in progress");
    const int slot = *a.slot_id;
    formation_ = detach_slot(formation_, slot);
    for (auto& other : state_.agents)
        if (other.slot_id && *other.slot_id > slot)
            other.slot_id = *other.slot_id - 1;
    a.slot_id.reset();
    a.joining = false;
    a.velocity = {};
    refresh_references(state_.t);
    log("agent " + std::to_string(c.agent_id) + " detached from slot " + std::to_string(slot));
}

void Engine::apply_attach(const cmd::Attach& c)
{
    AgentState& a = agent(c.agent_id);
    if (!a.detached())
        throw Error(ErrorKind::ConstraintViolation, "agent " + std::to_string(c.agent_id) + " is already in the formation");
    if (state_.transition)
        throw Error(ErrorKind::ConstraintViolation, "cannot attach while a formation transition is in progress");
    formation_ = attach_slot(formation_, c.offset);
    a.slot_id = static_cast<int>(formation_.size()) - 1;
    a.joining = true;
    refresh_references(state_.t);
    log("agent " + std::to_string(c.agent_id) + " attached to new slot " + std::to_string(*a.slot_id));
}

void Engine::apply_set_speed(const cmd::SetSpeed& c)
{
    if (!(c.v_max > 0.0) || c.v_max > config_.model.v_max_agent)
        throw Error(ErrorKind::ConstraintViolation, "speed must lie in (0, agent v_max]");
    if (!trajectory_active())
        throw Error(ErrorKind::ConstraintViolation, "no active trajectory to re-plan");
    trajectory_ = trajectory_->replanned(clock_, c.v_max);
    clock_ = 0.0;
    log("trajectory re-planned at v_max " + std::to_string(c.v_max) + " m/s");
}

} // namespace flocking
