#include "flock/trajectory.hpp"

#include "flock/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace flocking {

namespace detail {

namespace {

template <typename F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth)
{
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol)
{
    if (b <= a)
        return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, 40);
}

} // namespace

// Uniform Catmull-Rom spline through the waypoints, with reflected phantom
// end points so that a two-point path is an exact straight segment.
class Path {
public:
    explicit Path(const std::vector<Vec3>& pts)
    {
        if (pts.size() == 1) {
            single_ = pts.front();
            return;
        }
        const std::size_t n = pts.size();
        auto ctrl = [&](std::ptrdiff_t i) -> Vec3 {
            if (i < 0)
                return 2.0 * pts[0] - pts[1];
            if (static_cast<std::size_t>(i) >= n)
                return 2.0 * pts[n - 1] - pts[n - 2];
            return pts[static_cast<std::size_t>(i)];
        };
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            Segment seg;
            const auto k = static_cast<std::ptrdiff_t>(i);
            const Vec3 p0 = ctrl(k - 1), p1 = ctrl(k), p2 = ctrl(k + 1), p3 = ctrl(k + 2);
            seg.a = 2.0 * p1;
            seg.b = p2 - p0;
            seg.c = 2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3;
            seg.d = -p0 + 3.0 * p1 - 3.0 * p2 + p3;
            seg.s0 = s;
            seg.cum[0] = 0.0;
            for (std::size_t j = 0; j < kTable; ++j) {
                const double u0 = static_cast<double>(j) / kTable;
                const double u1 = static_cast<double>(j + 1) / kTable;
                seg.cum[j + 1] = seg.cum[j] + seg.arc(u0, u1);
            }
            seg.length = seg.cum[kTable];
            s += seg.length;
            segments_.push_back(seg);
        }
        length_ = s;
    }

    double length() const { return length_; }

    Vec3 position(double s) const
    {
        if (segments_.empty())
            return single_;
        const auto [seg, u] = locate(s);
        return seg->eval(u);
    }

    Vec3 tangent(double s) const
    {
        if (segments_.empty())
            return {};
        const auto [seg, u] = locate(s);
        const Vec3 d = seg->deriv(u);
        const double n = d.norm();
        return n > 0.0 ? d / n : Vec3{};
    }

private:
    static constexpr std::size_t kTable = 64;

    struct Segment {
        Vec3 a, b, c, d;
        double s0 = 0.0;
        double length = 0.0;
        std::array<double, kTable + 1> cum{};

        Vec3 eval(double u) const { return 0.5 * (a + u * (b + u * (c + u * d))); }
        Vec3 deriv(double u) const { return 0.5 * (b + u * (2.0 * c + 3.0 * u * d)); }
        double arc(double u0, double u1) const
        {
            return adaptive_simpson([this](double u) { return deriv(u).norm(); }, u0, u1, 1e-13);
        }
    };

    std::pair<const Segment*, double> locate(double s) const
    {
        s = std::clamp(s, 0.0, length_);
        auto it = std::upper_bound(segments_.begin(), segments_.end(), s,
                                   [](double v, const Segment& seg) { return v < seg.s0; });
        const Segment& seg = *std::prev(it);
        const double local = std::min(s - seg.s0, seg.length);
        if (local <= 0.0)
            return {&seg, 0.0};
        if (local >= seg.length)
            return {&seg, 1.0};

        const auto c = std::upper_bound(seg.cum.begin(), seg.cum.end(), local);
        const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(c - seg.cum.begin()) - 1, kTable - 1);
        double lo = static_cast<double>(j) / kTable;
        double hi = static_cast<double>(j + 1) / kTable;
        const double base = seg.cum[j];
        const double span = seg.cum[j + 1] - seg.cum[j];
        double u = span > 0.0 ? lo + (hi - lo) * (local - base) / span : lo;

        // Newton on S(u) = local, kept inside the bracket.
        for (int iter = 0; iter < 50; ++iter) {
            const double f = base + seg.arc(static_cast<double>(j) / kTable, u) - local;
            if (std::abs(f) < 1e-12)
                break;
            if (f > 0.0)
                hi = u;
            else
                lo = u;
            const double df = seg.deriv(u).norm();
            double next = df > 0.0 ? u - f / df : 0.5 * (lo + hi);
            if (!(next > lo && next < hi))
                next = 0.5 * (lo + hi);
            if (std::abs(next - u) < 1e-15)
                break;
            u = next;
        }
        return {&seg, u};
    }

    std::vector<Segment> segments_;
    Vec3 single_;
    double length_ = 0.0;
};

SpeedProfile::SpeedProfile(double s_begin, double s_end, double v0, double v_max, double a)
    : s_begin_(s_begin), s_end_(s_end)
{
    const double len = s_end - s_begin;
    if (len <= 0.0)
        return;
    auto push = [this](double dur, double v_start, double acc) {
        if (dur <= 0.0)
            return;
        const double t0 = phases_.empty() ? 0.0 : phases_.back().t0 + phases_.back().dur;
        double s0 = s_begin_;
        if (!phases_.empty()) {
            const Phase& p = phases_.back();
            s0 = p.s0 + p.v0 * p.dur + 0.5 * p.a * p.dur * p.dur;
        }
        phases_.push_back({t0, dur, s0, v_start, acc});
    };
    auto stop_within = [&](double v) {
        // Cannot stop at nominal deceleration; brake just hard enough.
        push(2.0 * len / v, v, -v * v / (2.0 * len));
    };

    if (v0 <= v_max) {
        const double d_acc = (v_max * v_max - v0 * v0) / (2.0 * a);
        const double d_dec = v_max * v_max / (2.0 * a);
        if (d_acc + d_dec <= len) {
            push((v_max - v0) / a, v0, a);
            push((len - d_acc - d_dec) / v_max, v_max, 0.0);
            push(v_max / a, v_max, -a);
        } else if (len >= v0 * v0 / (2.0 * a)) {
            const double vp = std::sqrt(a * len + 0.5 * v0 * v0);
            push((vp - v0) / a, v0, a);
            push(vp / a, vp, -a);
        } else {
            stop_within(v0);
        }
    } else {
        if (v0 * v0 / (2.0 * a) <= len) {
            push((v0 - v_max) / a, v0, -a);
            push((len - v0 * v0 / (2.0 * a)) / v_max, v_max, 0.0);
            push(v_max / a, v_max, -a);
        } else {
            stop_within(v0);
        }
    }
    duration_ = phases_.empty() ? 0.0 : phases_.back().t0 + phases_.back().dur;
}

double SpeedProfile::distance(double t) const
{
    if (phases_.empty() || t <= 0.0)
        return s_begin_;
    if (t >= duration_)
        return s_end_;
    auto it = std::upper_bound(phases_.begin(), phases_.end(), t, [](double v, const Phase& p) { return v < p.t0; });
    const Phase& p = *std::prev(it);
    const double tau = t - p.t0;
    return std::min(s_end_, p.s0 + p.v0 * tau + 0.5 * p.a * tau * tau);
}

double SpeedProfile::speed(double t) const
{
    if (phases_.empty() || t < 0.0 || t >= duration_)
        return 0.0;
    auto it = std::upper_bound(phases_.begin(), phases_.end(), t, [](double v, const Phase& p) { return v < p.t0; });
    const Phase& p = *std::prev(it);
    return std::max(0.0, p.v0 + p.a * (t - p.t0));
}

double YawProfile::yaw(double t) const
{
    if (knots_.empty())
        return 0.0;
    if (t <= knots_.front().t)
        return knots_.front().yaw;
    if (t >= knots_.back().t)
        return knots_.back().yaw;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t, [](double v, const Knot& k) { return v < k.t; });
    const Knot& b = *it;
    const Knot& a = *std::prev(it);
    const double s = (t - a.t) / (b.t - a.t);
    return a.yaw + (b.yaw - a.yaw) * s;
}

double YawProfile::rate(double t) const
{
    if (knots_.size() < 2 || t < knots_.front().t || t >= knots_.back().t)
        return 0.0;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t, [](double v, const Knot& k) { return v < k.t; });
    const Knot& b = *it;
    const Knot& a = *std::prev(it);
    return (b.yaw - a.yaw) / (b.t - a.t);
}

} // namespace detail

namespace {

constexpr double kYawStep = 1e-3; // path-facing integration step, seconds

std::optional<double> heading_of(const Vec3& tangent)
{
    if (std::hypot(tangent.x, tangent.y) < 1e-9)
        return std::nullopt;
    return std::atan2(tangent.y, tangent.x);
}

detail::YawProfile path_facing_profile(const detail::Path& path, const detail::SpeedProfile& speed, double yaw0,
                                       double rate_max)
{
    std::vector<detail::YawProfile::Knot> knots{{0.0, yaw0}};
    double yaw = yaw0;
    double target = yaw0;
    const double max_step = rate_max * kYawStep;
    auto advance = [&](double t) {
        if (auto h = heading_of(path.tangent(speed.distance(t))))
            target = *h;
        const double err = wrap_angle(target - yaw);
        yaw += std::clamp(err, -max_step, max_step);
        knots.push_back({t, yaw});
        return std::abs(err) <= max_step;
    };
    std::size_t k = 1;
    const auto steps = static_cast<std::size_t>(std::ceil(speed.duration() / kYawStep));
    bool settled = true;
    for (; k <= steps; ++k)
        settled = advance(static_cast<double>(k) * kYawStep);
    // Finish any slew that is still saturated when the translation ends.
    for (std::size_t guard = 0; !settled && guard < 100000; ++guard, ++k)
        settled = advance(static_cast<double>(k) * kYawStep);
    return detail::YawProfile(std::move(knots));
}

detail::YawProfile sequence_profile(const YawSequence& seq, double yaw0, double rate_max)
{
    std::vector<detail::YawProfile::Knot> knots{{0.0, yaw0}};
    double cur_t = 0.0;
    double cur_yaw = yaw0;
    for (const auto& target : seq.targets) {
        const double start = target.t;
        if (start + 1e-9 < cur_t) {
            throw Error(ErrorKind::InfeasibleYaw,
                        "yaw target at t=" + std::to_string(target.t) +
                            " s starts before the previous rotation completes at yaw_rate_max");
        }
        if (start > cur_t)
            knots.push_back({start, cur_yaw});
        const double dur = std::abs(target.yaw - cur_yaw) / rate_max;
        cur_t = std::max(start, cur_t) + dur;
        cur_yaw = target.yaw;
        if (dur > 0.0)
            knots.push_back({cur_t, cur_yaw});
    }
    return detail::YawProfile(std::move(knots));
}

std::vector<Vec3> path_points(const TrajectorySpec& spec)
{
    const bool rotation_only = std::holds_alternative<YawSequence>(spec.yaw_mode);
    std::vector<Vec3> pts;
    for (const auto& wp : spec.waypoints) {
        if (!wp.position.finite())
            throw Error(ErrorKind::DegenerateSpec, "waypoints must be finite");
        if (!pts.empty() && distance(pts.back(), wp.position) < 1e-9) {
            if (rotation_only)
                continue;
            throw Error(ErrorKind::DegenerateSpec, "consecutive waypoints coincide");
        }
        pts.push_back(wp.position);
    }
    if (pts.empty())
        throw Error(ErrorKind::DegenerateSpec, "trajectory needs at least one waypoint");
    if (pts.size() < 2 && !rotation_only)
        throw Error(ErrorKind::DegenerateSpec, "trajectory needs two distinct waypoints unless it is a pure rotation");
    return pts;
}

} // namespace

PlannedTrajectory plan(const TrajectorySpec& spec)
{
    if (!(spec.v_max > 0.0) || !(spec.a_max > 0.0) || !(spec.yaw_rate_max > 0.0))
        throw Error(ErrorKind::DegenerateSpec, "v_max, a_max and yaw_rate_max must be positive");

    PlannedTrajectory traj;
    traj.spec_ = spec;
    auto path = std::make_shared<detail::Path>(path_points(spec));
    traj.speed_ = detail::SpeedProfile(0.0, path->length(), 0.0, spec.v_max, spec.a_max);

    double yaw0 = 0.0;
    if (spec.initial_yaw)
        yaw0 = *spec.initial_yaw;
    else if (spec.waypoints.front().hold_yaw)
        yaw0 = *spec.waypoints.front().hold_yaw;
    else if (std::holds_alternative<PathFacing>(spec.yaw_mode)) {
        if (auto h = heading_of(path->tangent(0.0)))
            yaw0 = *h;
    }

    std::visit(
        [&](const auto& mode) {
            using M = std::decay_t<decltype(mode)>;
            if constexpr (std::is_same_v<M, PathFacing>) {
                traj.yaw_ = path_facing_profile(*path, traj.speed_, yaw0, spec.yaw_rate_max);
            } else if constexpr (std::is_same_v<M, FixedYaw>) {
                traj.yaw_ = detail::YawProfile({{0.0, mode.yaw}});
            } else {
                traj.yaw_ = sequence_profile(mode, yaw0, spec.yaw_rate_max);
            }
        },
        spec.yaw_mode);

    traj.path_ = std::move(path);
    traj.duration_ = std::max(traj.speed_.duration(), traj.yaw_.end_time());
    return traj;
}

double PlannedTrajectory::length() const { return path_ ? path_->length() : 0.0; }

Vec3 PlannedTrajectory::position_at(double s) const { return path_->position(s); }

Vec3 PlannedTrajectory::tangent_at(double s) const { return path_->tangent(s); }

TrajectorySample PlannedTrajectory::sample(double t) const
{
    t = std::max(t, 0.0);
    TrajectorySample out;
    out.t = t;
    const double s = speed_.distance(t);
    const double yaw = yaw_.yaw(t);
    out.pose = Pose::from_yaw(yaw, path_->position(s));
    if (t < duration_) {
        out.twist.linear = path_->tangent(s) * speed_.speed(t);
        out.twist.angular = {0.0, 0.0, yaw_.rate(t)};
    }
    return out;
}

PlannedTrajectory PlannedTrajectory::replanned(double at, double new_v_max) const
{
    if (!(new_v_max > 0.0))
        throw Error(ErrorKind::DegenerateSpec, "v_max must be positive");
    at = std::clamp(at, 0.0, duration_);
    PlannedTrajectory next = *this;
    next.spec_.v_max = new_v_max;
    next.speed_ = detail::SpeedProfile(speed_.distance(at), path_->length(), speed_.speed(at), new_v_max,
                                       spec_.a_max);
    const double yaw_now = yaw_.yaw(at);
    std::visit(
        [&](const auto& mode) {
            using M = std::decay_t<decltype(mode)>;
            if constexpr (std::is_same_v<M, PathFacing>) {
                next.yaw_ = path_facing_profile(*path_, next.speed_, yaw_now, spec_.yaw_rate_max);
            } else if constexpr (std::is_same_v<M, FixedYaw>) {
                next.yaw_ = yaw_;
            } else {
                // Keep the remaining knots of the original schedule, shifted.
                std::vector<detail::YawProfile::Knot> knots{{0.0, yaw_now}};
                for (const auto& k : yaw_.knots())
                    if (k.t > at)
                        knots.push_back({k.t - at, k.yaw});
                next.yaw_ = detail::YawProfile(std::move(knots));
            }
        },
        spec_.yaw_mode);
    next.duration_ = std::max(next.speed_.duration(), next.yaw_.end_time());
    return next;
}

} // namespace flocking
