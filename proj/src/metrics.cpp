#include "flock/metrics.hpp"

#include "flock/error.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace flocking {

Observation observe(const SwarmState& state)
{
    Observation obs;
    obs.t = state.t;
    obs.phase = state.phase;
    obs.vc_position = state.vc.pose.translation;
    obs.vc_yaw = state.vc.pose.rotation.yaw();
    obs.vc_velocity = state.vc.twist.linear;
    obs.vc_yaw_rate = state.vc.twist.angular.z;
    obs.agents.reserve(state.agents.size());
    for (const auto& a : state.agents) {
        AgentObservation ao;
        ao.agent_id = a.agent_id;
        ao.detached = a.detached();
        ao.position = a.position;
        ao.velocity = a.velocity;
        ao.yaw = a.yaw;
        if (a.reference)
            ao.reference = a.reference->translation;
        obs.agents.push_back(ao);
    }
    return obs;
}

MetricsSample sample_metrics(const Observation& obs)
{
    MetricsSample s;
    s.t = obs.t;
    const Pose frame = Pose::from_yaw(obs.vc_yaw, obs.vc_position);
    const Twist twist{obs.vc_velocity, {0.0, 0.0, obs.vc_yaw_rate}};

    std::vector<const AgentObservation*> members;
    for (const auto& a : obs.agents)
        if (!a.detached)
            members.push_back(&a);

    for (const auto* a : members) {
        s.agent_ids.push_back(a->agent_id);
        s.cohesion.push_back((a->position - obs.vc_position).norm());
        s.reference_error.push_back((a->position - a->reference).norm());
        s.alignment.push_back(relative_velocity_in_frame(a->position, a->velocity, frame, twist).norm());
    }
    const std::size_t n = members.size();
    s.separation.assign(n * n, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = (members[i]->position - members[j]->position).norm();
            s.separation[i * n + j] = d;
            s.separation[j * n + i] = d;
        }
    }
    return s;
}

MetricsSample sample_metrics(const SwarmState& state) { return sample_metrics(observe(state)); }

Stat summarize_series(const std::vector<double>& values)
{
    Stat st;
    st.count = values.size();
    if (values.empty())
        return st;
    double sum = 0.0;
    for (double v : values)
        sum += v;
    st.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values)
        sq += (v - st.mean) * (v - st.mean);
    st.std = std::sqrt(sq / static_cast<double>(values.size()));
    return st;
}

Window default_window(double t_motion_start, double t_end) { return {t_motion_start + 2.0, t_end - 1.0}; }

MetricsReport summarize(const std::vector<MetricsSample>& samples, const Window& window,
                        const Thresholds& thresholds)
{
    struct Series {
        std::vector<double> cohesion, reference_error, alignment;
    };
    std::map<int, Series> per_agent;
    std::map<std::pair<int, int>, std::vector<double>> per_pair;

    MetricsReport report;
    report.window = window;
    report.thresholds = thresholds;

    for (const auto& s : samples) {
        if (s.t < window.start || s.t > window.end)
            continue;
        ++report.sample_count;
        const std::size_t n = s.size();
        for (std::size_t i = 0; i < n; ++i) {
            Series& series = per_agent[s.agent_ids[i]];
            series.cohesion.push_back(s.cohesion[i]);
            series.reference_error.push_back(s.reference_error[i]);
            series.alignment.push_back(s.alignment[i]);
            if (s.cohesion[i] > thresholds.d_max + kThresholdSlack)
                ++report.violations.cohesion;
            if (s.alignment[i] > thresholds.delta)
                ++report.violations.alignment;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d = s.separation_at(i, j);
                const int a = s.agent_ids[i], b = s.agent_ids[j];
                per_pair[{std::min(a, b), std::max(a, b)}].push_back(d);
                if (d < thresholds.d_min - kThresholdSlack)
                    ++report.violations.separation;
            }
        }
    }
    if (report.sample_count == 0)
        throw Error(ErrorKind::EmptyWindow, "no samples inside the window [" + std::to_string(window.start) + ", " +
                                                std::to_string(window.end) + "]");

    for (const auto& [id, series] : per_agent)
        report.agents.push_back({id, summarize_series(series.cohesion), summarize_series(series.reference_error),
                                 summarize_series(series.alignment)});
    for (const auto& [key, values] : per_pair)
        report.pairs.push_back({key.first, key.second, summarize_series(values)});
    return report;
}

std::vector<CorrectedCohesion> corrected_cohesion(const MetricsReport& report)
{
    std::vector<CorrectedCohesion> out;
    for (const auto& a : report.agents)
        out.push_back({a.agent_id, a.cohesion.mean + a.reference_error.mean,
                       std::hypot(a.cohesion.std, a.reference_error.std)});
    return out;
}

} // namespace flocking
