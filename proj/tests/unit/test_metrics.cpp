#include "flock/error.hpp"
#include "flock/metrics.hpp"

#include <doctest.h>

#include <cmath>

using namespace flocking;

namespace {

Observation observation_with(const std::vector<Vec3>& offsets, double t = 0.0)
{
    Observation o;
    o.t = t;
    o.vc_position = {0, 0, 1};
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        AgentObservation a;
        a.agent_id = static_cast<int>(i);
        a.position = o.vc_position + offsets[i];
        a.reference = a.position;
        o.agents.push_back(a);
    }
    return o;
}

MetricsReport report_with(double cohesion, double ref_err)
{
    MetricsReport r;
    AgentSummary a;
    a.cohesion.mean = cohesion;
    a.reference_error.mean = ref_err;
    r.agents.push_back(a);
    return r;
}

std::unique_ptr<Engine> ideal_engine(const FormationSpec& f)
{
    EngineConfig c;
    c.model.mode = AgentModel::Mode::Ideal;
    const Pose vc = Pose::from_translation({0, 0, 1});
    std::vector<Vec3> pos;
    for (const auto& s : f.slots())
        pos.push_back(transform_point(vc, s.offset.translation));
    auto e = std::make_unique<Engine>(c, f, pos, std::vector<double>{}, vc);
    e->run_setup(assign_slots(pos, f, vc), 0.5);
    return e;
}

} // namespace

TEST_CASE("ideal triangle sample")
{
    const double R = 1.5;
    const auto f = regular_formation(3, R, 1.0);
    auto e = ideal_engine(f);
    const auto m = sample_metrics(e->state());
    REQUIRE(m.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(m.cohesion[i] - R) < 1e-12);
        CHECK(m.reference_error[i] == 0.0);
        CHECK(m.alignment[i] == 0.0);
    }
}

TEST_CASE("separation of two agents a meter apart")
{
    const auto m = sample_metrics(observation_with({{0, 0.5, 0}, {0, -0.5, 0}}));
    CHECK(m.separation_at(0, 1) == doctest::Approx(1.0));
    CHECK(m.separation_at(0, 1) == m.separation_at(1, 0));
    CHECK(std::isnan(m.separation_at(0, 0)));
}

TEST_CASE("single agent swarm")
{
    const auto m = sample_metrics(observation_with({{2, 0, 0}}));
    CHECK(m.size() == 1);
    CHECK(m.separation.size() == 1);
    CHECK(std::isnan(m.separation[0]));
    CHECK(m.cohesion[0] == doctest::Approx(2.0));
}

TEST_CASE("detached agents are excluded")
{
    auto o = observation_with({{1, 0, 0}, {-1, 0, 0}, {0, 5, 0}});
    o.agents[1].detached = true;
    const auto m = sample_metrics(o);
    CHECK(m.agent_ids == std::vector<int>{0, 2});
}

TEST_CASE("summarize_series")
{
    const auto c = summarize_series({4.2, 4.2, 4.2, 4.2});
    CHECK(c.mean == doctest::Approx(4.2));
    CHECK(c.std == 0.0);
    const auto s = summarize_series({1.0, 3.0});
    CHECK(s.mean == 2.0);
    CHECK(s.std == 1.0);
}

TEST_CASE("corrected cohesion")
{
    CHECK(corrected_cohesion(report_with(0.849, 0.238))[0].mean == doctest::Approx(1.087));
    CHECK(corrected_cohesion(report_with(1.25, 0.0))[0].mean == 1.25);
    CHECK(corrected_cohesion(report_with(1.0, 0.5))[0].mean == 1.5);
}

TEST_CASE("summaries only use the window")
{
    std::vector<MetricsSample> samples;
    for (int i = 0; i <= 10; ++i)
        samples.push_back(sample_metrics(observation_with({{double(i), 0, 0}, {0, 1, 0}}, double(i))));
    const Thresholds th{100.0, 0.0, 1.0};
    const auto r = summarize(samples, {2.0, 4.0}, th);
    CHECK(r.sample_count == 3);
    CHECK(r.agents[0].cohesion.mean == doctest::Approx(3.0));
    CHECK_THROWS_AS(summarize(samples, {20.0, 30.0}, th), Error);
    try {
        summarize(samples, {20.0, 30.0}, th);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyWindow);
    }
    const Window w = default_window(1.0, 30.0);
    CHECK(w.start == 3.0);
    CHECK(w.end == 29.0);
}

TEST_CASE("violation counts against thresholds")
{
    std::vector<MetricsSample> samples;
    auto o = observation_with({{2, 0, 0}, {2.5, 0, 0}});
    o.agents[0].velocity = {0.2, 0, 0};
    samples.push_back(sample_metrics(o));
    const auto r = summarize(samples, {-1, 1}, {2.2, 1.0, 0.15});
    CHECK(r.violations.cohesion == 1);   // 2.5 > 2.2
    CHECK(r.violations.separation == 1); // 0.5 < 1.0
    CHECK(r.violations.alignment == 1);  // 0.2 > 0.15
}

TEST_CASE("ideal run has zero violations at tight thresholds, recounted by brute force")
{
    const double side = 2.0;
    const double R = side / std::sqrt(3.0);
    auto e = ideal_engine(regular_formation(3, R, 1.0));
    TrajectorySpec s;
    s.waypoints = {{{0, 0, 1}, {}}, {{3, 0, 1}, {}}, {{5, 3, 1}, {}}};
    s.v_max = 0.8;
    s.yaw_rate_max = 1.0;
    e->apply(cmd::StartTrajectory{s});
    std::vector<MetricsSample> samples;
    std::size_t brute = 0;
    const Thresholds th{R, side - 1e-6, 1e-6};
    while (e->trajectory_active()) {
        e->tick();
        const auto& st = e->state();
        samples.push_back(sample_metrics(st));
        const Pose frame = Pose::from_yaw(st.vc.pose.rotation.yaw(), st.vc.pose.translation);
        for (std::size_t i = 0; i < st.agents.size(); ++i) {
            const auto& a = st.agents[i];
            brute += distance(a.position, st.vc.pose.translation) > th.d_max + 1e-9;
            brute += relative_velocity_in_frame(a.position, a.velocity, frame, st.vc.twist).norm() > th.delta;
            for (std::size_t j = i + 1; j < st.agents.size(); ++j)
                brute += distance(a.position, st.agents[j].position) < th.d_min - 1e-9;
        }
    }
    const auto r = summarize(samples, {0, 1e9}, th);
    CHECK(brute == 0);
    CHECK(r.violations.cohesion + r.violations.separation + r.violations.alignment == 0);
    for (const auto& a : r.agents) {
        CHECK(std::abs(a.cohesion.mean - R) < 1e-9);
        CHECK(a.cohesion.std < 1e-9);
        CHECK(a.alignment.mean < 1e-9);
    }
}

TEST_CASE("pure rotation is invisible to alignment")
{
    auto e = ideal_engine(line_formation(3, 1.0, 0.5));
    TrajectorySpec s;
    s.waypoints = {{{0, 0, 1}, {}}};
    s.yaw_rate_max = 0.5;
    s.yaw_mode = YawSequence{{{0.5, 2.0}, {5.0, 0.5}}};
    e->apply(cmd::StartTrajectory{s});
    double max_world_speed = 0.0;
    while (e->trajectory_active()) {
        e->tick();
        const auto m = sample_metrics(e->state());
        for (std::size_t i = 0; i < m.size(); ++i)
            CHECK(m.alignment[i] < 1e-9);
        for (const auto& a : e->state().agents)
            max_world_speed = std::max(max_world_speed, a.velocity.norm());
    }
    CHECK(max_world_speed == doctest::Approx(0.5));
}
