#pragma once

#include "flock/engine.hpp"
#include "flock/pose.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace flocking {

// Flat view of one instant of a run: exactly the quantities a trace row
// carries, so that metrics computed live and from a trace file coincide.
struct AgentObservation {
    int agent_id = 0;
    bool detached = false;
    Vec3 position;
    Vec3 velocity;
    double yaw = 0.0;
    Vec3 reference; // meaningless when detached
};

struct Observation {
    double t = 0.0;
    Phase phase = Phase::Motion;
    Vec3 vc_position;
    double vc_yaw = 0.0;
    Vec3 vc_velocity;
    double vc_yaw_rate = 0.0;
    std::vector<AgentObservation> agents;
};

Observation observe(const SwarmState& state);

struct MetricsSample {
    double t = 0.0;
    std::vector<int> agent_ids; // slotted agents only
    std::vector<double> cohesion;        // m, ||p_i - p_vc||
    std::vector<double> alignment;       // m/s, ||velocity relative to the centroid frame||
    std::vector<double> reference_error; // m, ||p_i - ref_i||
    // n x n row-major over agent_ids, NaN on the diagonal.
    std::vector<double> separation;

    std::size_t size() const { return agent_ids.size(); }
    double separation_at(std::size_t i, std::size_t j) const { return separation[i * size() + j]; }
};

MetricsSample sample_metrics(const Observation& obs);
MetricsSample sample_metrics(const SwarmState& state);

struct Stat {
    double mean = 0.0;
    double std = 0.0; // population standard deviation
    std::size_t count = 0;
};

// Two-pass mean and population standard deviation.
Stat summarize_series(const std::vector<double>& values);

struct Thresholds {
    double d_max = 0.0;
    double d_min = 0.0;
    double delta = 0.15; // m/s
};

struct Window {
    double start = 0.0;
    double end = 0.0;
};

// Steady-state window: skip the first 2 s after motion starts and the last 1 s.
Window default_window(double t_motion_start, double t_end);

struct AgentSummary {
    int agent_id = 0;
    Stat cohesion;
    Stat reference_error;
    Stat alignment;
};

struct PairSummary {
    int agent_i = 0;
    int agent_j = 0;
    Stat separation;
};

struct Violations {
    std::size_t cohesion = 0;   // samples with cohesion > d_max
    std::size_t separation = 0; // samples with separation < d_min
    std::size_t alignment = 0;  // samples with alignment > delta
};

struct MetricsReport {
    Window window;
    Thresholds thresholds;
    std::size_t sample_count = 0;
    std::vector<AgentSummary> agents;
    std::vector<PairSummary> pairs;
    Violations violations;
};

// Absolute slack on the distance thresholds, absorbing rounding in the
// position arithmetic of rigid formations.
inline constexpr double kThresholdSlack = 1e-9;

// Throws EmptyWindow when no sample falls inside the window.
MetricsReport summarize(const std::vector<MetricsSample>& samples, const Window& window,
                        const Thresholds& thresholds);

struct CorrectedCohesion {
    int agent_id = 0;
    double mean = 0.0;
    double std = 0.0; // cohesion and reference-error spreads combined in quadrature
};

// Cohesion plus reference error per agent.
std::vector<CorrectedCohesion> corrected_cohesion(const MetricsReport& report);

} // namespace flocking
