#include "flock/pose.hpp"

#include <algorithm>
#include <stdexcept>

namespace flocking {

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z)
{
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n))
        throw std::invalid_argument("quaternion must have a finite nonzero norm");
    w_ = w / n;
    x_ = x / n;
    y_ = y / n;
    z_ = z / n;
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle)
{
    const double n = axis.norm();
    if (!(n > 0.0))
        return identity();
    const double s = std::sin(angle / 2.0) / n;
    return {std::cos(angle / 2.0), axis.x * s, axis.y * s, axis.z * s};
}

UnitQuaternion UnitQuaternion::from_yaw(double yaw)
{
    return {std::cos(yaw / 2.0), 0.0, 0.0, std::sin(yaw / 2.0)};
}

UnitQuaternion UnitQuaternion::from_rpy(double roll, double pitch, double yaw)
{
    const double cr = std::cos(roll / 2.0), sr = std::sin(roll / 2.0);
    const double cp = std::cos(pitch / 2.0), sp = std::sin(pitch / 2.0);
    const double cy = std::cos(yaw / 2.0), sy = std::sin(yaw / 2.0);
    return {cr * cp * cy + sr * sp * sy,
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy};
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& o) const
{
    return {w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
            w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
            w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
            w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_};
}

UnitQuaternion UnitQuaternion::conjugate() const
{
    UnitQuaternion q;
    q.w_ = w_;
    q.x_ = -x_;
    q.y_ = -y_;
    q.z_ = -z_;
    return q;
}

Vec3 UnitQuaternion::rotate(const Vec3& v) const
{
    // v' = v + 2w (u x v) + 2 u x (u x v), u = vector part
    const Vec3 u{x_, y_, z_};
    const Vec3 t = 2.0 * cross(u, v);
    return v + w_ * t + cross(u, t);
}

Matrix3 UnitQuaternion::matrix() const
{
    const double xx = x_ * x_, yy = y_ * y_, zz = z_ * z_;
    const double xy = x_ * y_, xz = x_ * z_, yz = y_ * z_;
    const double wx = w_ * x_, wy = w_ * y_, wz = w_ * z_;
    return {{{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)},
             {2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)},
             {2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}}};
}

double UnitQuaternion::yaw() const
{
    return std::atan2(2.0 * (w_ * z_ + x_ * y_), 1.0 - 2.0 * (y_ * y_ + z_ * z_));
}

UnitQuaternion UnitQuaternion::canonical() const
{
    if (w_ >= 0.0)
        return *this;
    UnitQuaternion q;
    q.w_ = -w_;
    q.x_ = -x_;
    q.y_ = -y_;
    q.z_ = -z_;
    return q;
}

double UnitQuaternion::angle_to(const UnitQuaternion& other) const
{
    // atan2 of the relative rotation keeps full precision near zero, where
    // acos of the dot product loses half the digits.
    const double dw = w_ * other.w_ + x_ * other.x_ + y_ * other.y_ + z_ * other.z_;
    const double dx = w_ * other.x_ - x_ * other.w_ - y_ * other.z_ + z_ * other.y_;
    const double dy = w_ * other.y_ + x_ * other.z_ - y_ * other.w_ - z_ * other.x_;
    const double dz = w_ * other.z_ - x_ * other.y_ + y_ * other.x_ - z_ * other.w_;
    return 2.0 * std::atan2(std::sqrt(dx * dx + dy * dy + dz * dz), std::abs(dw));
}

UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b, double s)
{
    double bw = b.w(), bx = b.x(), by = b.y(), bz = b.z();
    double d = a.w() * bw + a.x() * bx + a.y() * by + a.z() * bz;
    if (d < 0.0) {
        d = -d;
        bw = -bw;
        bx = -bx;
        by = -by;
        bz = -bz;
    }
    double wa = 1.0 - s;
    double wb = s;
    if (d < 1.0 - 1e-12) {
        const double theta = std::acos(d);
        const double st = std::sin(theta);
        wa = std::sin((1.0 - s) * theta) / st;
        wb = std::sin(s * theta) / st;
    }
    return {wa * a.w() + wb * bw, wa * a.x() + wb * bx, wa * a.y() + wb * by, wa * a.z() + wb * bz};
}

Pose compose(const Pose& a, const Pose& b)
{
    return {a.rotation * b.rotation, a.rotation.rotate(b.translation) + a.translation};
}

Pose inverse(const Pose& p)
{
    const UnitQuaternion r = p.rotation.conjugate();
    return {r, -r.rotate(p.translation)};
}

Vec3 transform_point(const Pose& p, const Vec3& q)
{
    return p.rotation.rotate(q) + p.translation;
}

Vec3 relative_velocity_in_frame(const Vec3& agent_pos_w, const Vec3& agent_vel_w,
                                const Pose& frame_pose, const Twist& frame_twist)
{
    const Vec3 lever = agent_pos_w - frame_pose.translation;
    const Vec3 rel_w = agent_vel_w - frame_twist.linear - cross(frame_twist.angular, lever);
    return frame_pose.rotation.conjugate().rotate(rel_w);
}

double wrap_angle(double a)
{
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi)
        a += 2.0 * kPi;
    return a;
}

} // namespace flocking
