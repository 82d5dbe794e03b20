#pragma once

#include "flock/pose.hpp"

#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace flocking {

struct Waypoint {
    Vec3 position; // meters, world frame
    std::optional<double> hold_yaw; // radians
};

// Yaw follows the horizontal tangent of the path, slew-limited.
struct PathFacing {};
struct FixedYaw {
    double yaw = 0.0; // radians
};
// Absolute yaw targets; each rotation starts at `t` (seconds after the
// trajectory start) and proceeds at yaw_rate_max.
struct YawTarget {
    double t = 0.0;
    double yaw = 0.0; // radians, unwrapped
};
struct YawSequence {
    std::vector<YawTarget> targets;
};
using YawMode = std::variant<PathFacing, FixedYaw, YawSequence>;

struct TrajectorySpec {
    std::vector<Waypoint> waypoints;
    double v_max = 0.5;       // m/s
    double a_max = 1.0;       // m/s^2
    YawMode yaw_mode = PathFacing{};
    double yaw_rate_max = 1.0; // rad/s
    // Yaw at t = 0. Defaults to the path heading (path facing), the first
    // waypoint's hold_yaw, or zero.
    std::optional<double> initial_yaw;
};

struct TrajectorySample {
    double t = 0.0;
    Pose pose;   // centroid in the world frame
    Twist twist; // centroid velocity in the world frame
};

namespace detail {
class Path;

// Arc-length progress along the path: accelerate, cruise, decelerate.
class SpeedProfile {
public:
    SpeedProfile() = default;
    SpeedProfile(double s_begin, double s_end, double v0, double v_max, double a_max);

    double duration() const { return duration_; }
    double distance(double t) const; // absolute arc length
    double speed(double t) const;

private:
    struct Phase {
        double t0, dur, s0, v0, a;
    };
    std::vector<Phase> phases_;
    double s_begin_ = 0.0;
    double s_end_ = 0.0;
    double duration_ = 0.0;
};

// Piecewise-linear yaw over time.
class YawProfile {
public:
    struct Knot {
        double t;
        double yaw;
    };
    YawProfile() = default;
    explicit YawProfile(std::vector<Knot> knots) : knots_(std::move(knots)) {}

    double yaw(double t) const;
    double rate(double t) const;
    double end_time() const { return knots_.empty() ? 0.0 : knots_.back().t; }
    const std::vector<Knot>& knots() const { return knots_; }

private:
    std::vector<Knot> knots_;
};
} // namespace detail

// Immutable, cheap to copy; safe to sample from several threads.
class PlannedTrajectory {
public:
    TrajectorySample sample(double t) const;
    double duration() const { return duration_; }
    double length() const;
    const TrajectorySpec& spec() const { return spec_; }

    // Same path, new speed limit, starting from the state at local time `at`.
    // The returned trajectory's time 0 corresponds to `at` here.
    PlannedTrajectory replanned(double at, double new_v_max) const;

    // Geometry helpers, arc length in meters from the path start.
    Vec3 position_at(double s) const;
    Vec3 tangent_at(double s) const;

private:
    friend PlannedTrajectory plan(const TrajectorySpec& spec);

    TrajectorySpec spec_;
    std::shared_ptr<const detail::Path> path_;
    detail::SpeedProfile speed_;
    detail::YawProfile yaw_;
    double duration_ = 0.0;
};

// Throws DegenerateSpec or InfeasibleYaw.
PlannedTrajectory plan(const TrajectorySpec& spec);

} // namespace flocking
