#include "flock/engine.hpp"
#include "flock/error.hpp"

#include <doctest.h>

#include <functional>

#include <cmath>

using namespace flocking;

namespace {

ErrorKind kind_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::ParseError;
}

EngineConfig config(AgentModel::Mode mode, double k = 2.0, double v_max_agent = 3.0)
{
    EngineConfig c;
    c.dt = 0.01;
    c.model.mode = mode;
    c.model.k = k;
    c.model.v_max_agent = v_max_agent;
    return c;
}

std::vector<Vec3> on_slots(const FormationSpec& f, const Pose& vc)
{
    std::vector<Vec3> out;
    for (const auto& s : f.slots())
        out.push_back(transform_point(vc, s.offset.translation));
    return out;
}

// Engine whose agents start exactly on their slots, setup already finished.
std::unique_ptr<Engine> ready(const FormationSpec& f, EngineConfig c, const Pose& vc = Pose::from_translation({0, 0, 1}))
{
    auto pos = on_slots(f, vc);
    auto e = std::make_unique<Engine>(c, f, pos, std::vector<double>(pos.size(), vc.rotation.yaw()), vc);
    e->run_setup(assign_slots(pos, f, vc), 0.5);
    return e;
}

TrajectorySpec line15(double v = 0.5)
{
    TrajectorySpec s;
    s.waypoints = {{{0, 0, 1}, {}}, {{15, 0, 1}, {}}};
    s.v_max = v;
    s.yaw_rate_max = 1.0;
    return s;
}

TrajectorySpec curve()
{
    TrajectorySpec s;
    const double r = 4.0;
    s.waypoints.push_back({{0, 0, 1}, {}});
    for (int i = 1; i <= 8; ++i) {
        const double a = kPi / 2 * i / 8;
        s.waypoints.push_back({{3 + r * std::sin(a), r - r * std::cos(a), 1}, {}});
    }
    s.waypoints.push_back({{3 + r, r + 3, 1}, {}});
    s.v_max = 1.0;
    s.yaw_rate_max = 1.0;
    return s;
}

FormationSpec triangle() { return regular_formation(3, 2.0 / std::sqrt(3.0), 1.0); }

std::size_t count_events(Engine& e, const std::string& prefix, std::vector<EngineEvent>* out = nullptr)
{
    std::size_t n = 0;
    for (auto& ev : e.take_events()) {
        if (ev.text.rfind(prefix, 0) == 0) {
            ++n;
            if (out)
                out->push_back(ev);
        }
    }
    return n;
}

} // namespace

TEST_CASE("assign_slots")
{
    const auto f = square_formation(2.0, 1.0);
    const Pose vc = Pose::from_translation({3, 4, 1});
    const auto pos = on_slots(f, vc);
    CHECK(assign_slots(pos, f, vc) == Assignment{0, 1, 2, 3});

    // agents standing at the two line slots in swapped order take their own slot
    const auto line = line_formation(2, 1.0, 0.5);
    const std::vector<Vec3> swapped = {{0, -0.5, 0}, {0, 0.5, 0}};
    const Assignment a = assign_slots(swapped, line, Pose::identity());
    CHECK(a == Assignment{1, 0});
    const double chosen = distance(swapped[0], {0, -0.5, 0}) + distance(swapped[1], {0, 0.5, 0});
    const double crossing = distance(swapped[0], {0, 0.5, 0}) + distance(swapped[1], {0, -0.5, 0});
    CHECK(chosen < crossing);

    CHECK(kind_of([&] { assign_slots({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, f, vc); }) == ErrorKind::CountMismatch);
}

TEST_CASE("setup on slots takes no ticks")
{
    const auto f = triangle();
    const Pose vc = Pose::from_translation({0, 0, 1});
    const auto pos = on_slots(f, vc);
    Engine e(config(AgentModel::Mode::Lagged), f, pos, {}, vc);
    CHECK(e.run_setup(assign_slots(pos, f, vc), 0.5) == 0);
    CHECK(e.state().phase == Phase::Idle);
}

TEST_CASE("setup moves a single agent at the setup speed")
{
    FormationSpec one("one", {{0, Pose::identity()}}, 0.5);
    Engine e(config(AgentModel::Mode::Lagged), one, {{1, 0, 0}}, {}, Pose::identity());
    double max_speed = 0.0;
    const auto ticks = e.run_setup({0}, 0.5, [&](const SwarmState& s) {
        max_speed = std::max(max_speed, s.agents[0].velocity.norm());
        CHECK(std::abs(s.agents[0].position.y) < 1e-12);
    });
    const double t = static_cast<double>(ticks) * 0.01;
    // 0.95 m to come within the 0.05 m tolerance, at 0.5 m/s
    CHECK(t == doctest::Approx(1.9).epsilon(0.01));
    CHECK(max_speed <= 0.5 + 1e-12);
    CHECK(e.setup_complete());
}

TEST_CASE("crossing setup paths are a conflict")
{
    // slots at (0, 1) and (0, -1); each agent is sent to the far slot
    const auto line = line_formation(2, 2.0, 1.0);
    Engine e(config(AgentModel::Mode::Lagged), line, {{0, 3, 0}, {0, -3, 0}}, {}, Pose::identity());
    CHECK(kind_of([&] { e.begin_setup({1, 0}, 0.5); }) == ErrorKind::SetupConflict);
    CHECK_NOTHROW(e.begin_setup({0, 1}, 0.5));
}

TEST_CASE("stationary engine only advances time")
{
    auto e = ready(triangle(), config(AgentModel::Mode::Lagged));
    const SwarmState before = e->state();
    e->tick();
    const SwarmState& after = e->state();
    CHECK(after.t == doctest::Approx(before.t + 0.01));
    for (std::size_t i = 0; i < before.agents.size(); ++i) {
        CHECK(after.agents[i].position == before.agents[i].position);
        CHECK(after.agents[i].yaw == before.agents[i].yaw);
    }
    CHECK(after.vc.pose.translation == before.vc.pose.translation);
}

TEST_CASE("ideal agents keep the formation rigid along a curve")
{
    auto e = ready(triangle(), config(AgentModel::Mode::Ideal));
    e->apply(cmd::StartTrajectory{curve()});
    const auto f = triangle();
    while (e->trajectory_active()) {
        e->tick();
        const auto& s = e->state();
        for (const auto& a : s.agents) {
            const Vec3 expect = transform_point(s.vc.pose, f.slot(*a.slot_id).offset.translation);
            CHECK(distance(a.reference->translation, expect) < 1e-12);
            CHECK(std::abs(distance(a.position, s.vc.pose.translation) -
                           f.slot(*a.slot_id).offset.translation.norm()) < 1e-9);
        }
        for (std::size_t i = 0; i < s.agents.size(); ++i)
            for (std::size_t j = i + 1; j < s.agents.size(); ++j)
                CHECK(std::abs(distance(s.agents[i].position, s.agents[j].position) - 2.0) < 1e-9);
    }
}

TEST_CASE("lagged step response decays exponentially")
{
    FormationSpec origin("origin", {{0, Pose::identity()}}, 0.5);
    auto e = ready(origin, config(AgentModel::Mode::Lagged, 2.0, 100.0), Pose::identity());
    FormationSpec shifted("shifted", {{0, Pose::from_translation({1, 0, 0})}}, 0.5);
    e->apply(cmd::Morph{shifted, 0.01});
    const double t0 = e->state().t;
    while (e->state().t < t0 + 0.5 - 1e-9)
        e->tick();
    const double err = distance(e->state().agents[0].position, {1, 0, 0});
    // e^{-1} = 0.368; explicit Euler gives 0.98^50 = 0.364
    CHECK(err == doctest::Approx(std::exp(-1.0)).epsilon(0.02));
    CHECK(err == doctest::Approx(std::pow(0.98, 50)).epsilon(1e-9));
}

TEST_CASE("lagged steady-state error is v/k")
{
    auto e = ready(triangle(), config(AgentModel::Mode::Lagged));
    e->apply(cmd::StartTrajectory{line15(0.5)});
    while (e->state().t < 15.0)
        e->tick();
    for (const auto& a : e->state().agents)
        CHECK(distance(a.position, a.reference->translation) == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("runs are deterministic")
{
    auto run = [] {
        auto e = ready(triangle(), config(AgentModel::Mode::Lagged));
        e->apply(cmd::StartTrajectory{curve()});
        for (int i = 0; i < 500; ++i)
            e->tick();
        return e->state();
    };
    const auto a = run(), b = run();
    for (std::size_t i = 0; i < a.agents.size(); ++i) {
        CHECK(a.agents[i].position == b.agents[i].position);
        CHECK(a.agents[i].velocity == b.agents[i].velocity);
    }
}

TEST_CASE("square to triangle while flying")
{
    const auto sq = square_formation(2.0, 1.0);
    auto e = ready(sq, config(AgentModel::Mode::Ideal));
    e->apply(cmd::StartTrajectory{line15(0.5)});
    while (e->state().t < 8.0)
        e->tick();
    e->take_events();
    e->apply(cmd::Detach{3});
    e->apply(cmd::Morph{triangle(), 1.5});
    const double t_cmd = e->state().t;
    CHECK(e->state().agents[3].detached());
    const Vec3 hover = e->state().agents[3].position;

    double prev_speed = e->state().vc.twist.linear.norm();
    std::vector<EngineEvent> done;
    std::vector<Vec3> prev_refs;
    for (const auto& a : e->state().agents)
        prev_refs.push_back(a.reference ? a.reference->translation : Vec3{});
    while (e->state().t < t_cmd + 3.0) {
        e->tick();
        const auto& s = e->state();
        CHECK(s.phase == Phase::Motion);
        CHECK(std::abs(s.vc.twist.linear.norm() - prev_speed) <= 0.5 * 0.01 + 1e-12);
        prev_speed = s.vc.twist.linear.norm();
        CHECK(s.agents[3].position == hover);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(distance(s.agents[i].reference->translation, prev_refs[i]) <= 3.0 * 0.01);
            prev_refs[i] = s.agents[i].reference->translation;
            for (std::size_t j = i + 1; j < 3; ++j)
                CHECK(distance(s.agents[i].position, s.agents[j].position) >= 1.0);
        }
        count_events(*e, "morph complete", &done);
    }
    REQUIRE(done.size() == 1);
    CHECK(done[0].t == doctest::Approx(t_cmd + 1.5).epsilon(1e-9));
    CHECK(!e->state().transition);
    CHECK(e->state().formation.size() == 3);
}

TEST_CASE("command validation")
{
    auto e = ready(triangle(), config(AgentModel::Mode::Lagged));
    CHECK(kind_of([&] { e->apply(cmd::Detach{9}); }) == ErrorKind::UnknownAgent);
    CHECK(kind_of([&] { e->apply(cmd::Morph{square_formation(2.0, 1.0), 1.5}); }) == ErrorKind::CountMismatch);
    CHECK(kind_of([&] { e->apply(cmd::SetSpeed{1.0}); }) == ErrorKind::ConstraintViolation);
    CHECK(kind_of([&] { e->apply(cmd::Resume{}); }) == ErrorKind::ConstraintViolation);

    e->apply(cmd::Detach{2});
    // the vacated offset is still within d_min of nothing, but slot 0's is occupied
    CHECK(kind_of([&] { e->apply(cmd::Attach{2, triangle().slot(0).offset}); }) == ErrorKind::ConstraintViolation);
    CHECK(kind_of([&] { e->apply(cmd::Attach{0, triangle().slot(2).offset}); }) == ErrorKind::ConstraintViolation);
    CHECK_NOTHROW(e->apply(cmd::Attach{2, triangle().slot(2).offset}));
}

TEST_CASE("attached agent flies to its slot and rejoins")
{
    auto e = ready(triangle(), config(AgentModel::Mode::Lagged));
    e->apply(cmd::Detach{2});
    e->apply(cmd::Attach{2, Pose::from_translation({0, 0, 3})});
    CHECK(e->state().agents[2].joining);
    for (int i = 0; i < 500 && e->state().agents[2].joining; ++i)
        e->tick();
    CHECK(!e->state().agents[2].joining);
    CHECK(count_events(*e, "agent 2 joined") == 1);
}

TEST_CASE("pause freezes the centroid and resume continues")
{
    auto e = ready(triangle(), config(AgentModel::Mode::Lagged));
    e->apply(cmd::StartTrajectory{line15(0.5)});
    for (int i = 0; i < 300; ++i)
        e->tick();
    e->apply(cmd::Pause{});
    const Vec3 held = e->state().vc.pose.translation;
    for (int i = 0; i < 100; ++i)
        e->tick();
    CHECK(e->state().phase == Phase::Idle);
    CHECK(e->state().vc.pose.translation == held);
    e->apply(cmd::Resume{});
    e->tick();
    CHECK(e->state().phase == Phase::Motion);
    CHECK(e->state().vc.pose.translation.x > held.x);
}

TEST_CASE("set_speed re-plans the remaining path")
{
    auto e = ready(triangle(), config(AgentModel::Mode::Lagged));
    e->apply(cmd::StartTrajectory{line15(0.5)});
    for (int i = 0; i < 300; ++i)
        e->tick();
    e->apply(cmd::SetSpeed{1.0});
    double peak = 0.0;
    while (e->trajectory_active()) {
        e->tick();
        peak = std::max(peak, e->state().vc.twist.linear.norm());
        CHECK(e->state().vc.twist.linear.norm() <= 1.0 + 1e-9);
    }
    CHECK(peak == doctest::Approx(1.0));
    CHECK(distance(e->state().vc.pose.translation, {15, 0, 1}) < 1e-6);
    CHECK(kind_of([&] { e->apply(cmd::SetSpeed{10.0}); }) == ErrorKind::ConstraintViolation);
}

TEST_CASE("queued commands apply at the next tick in order")
{
    auto e = ready(triangle(), config(AgentModel::Mode::Lagged));
    std::vector<std::string> order;
    e->enqueue(cmd::Detach{1}, [&](const CommandResult& r) { order.push_back(r.accepted ? "a" : r.reason); });
    e->enqueue(cmd::Detach{1}, [&](const CommandResult& r) { order.push_back(r.accepted ? "a" : r.reason); });
    e->enqueue(cmd::Detach{7}, [&](const CommandResult& r) { order.push_back(r.accepted ? "a" : r.reason); });
    CHECK(order.empty());
    e->tick();
    CHECK(order == std::vector<std::string>{"a", "ConstraintViolation", "UnknownAgent"});

    bool answered = false;
    {
        auto doomed = ready(triangle(), config(AgentModel::Mode::Lagged));
        doomed->enqueue(cmd::Pause{}, [&](const CommandResult& r) { answered = !r.accepted; });
    }
    CHECK(answered);
}
