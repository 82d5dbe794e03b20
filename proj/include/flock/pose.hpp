#pragma once

#include <array>
#include <cmath>

namespace flocking {

// Positions in meters, velocities in m/s or rad/s depending on use.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o)
    {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o)
    {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    constexpr bool operator==(const Vec3&) const = default;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double distance(const Vec3& a, const Vec3& b) { return (b - a).norm(); }

using Matrix3 = std::array<std::array<double, 3>, 3>;

// Rotation as a unit quaternion. Every constructor renormalizes, so an
// instance always has norm 1 up to rounding.
class UnitQuaternion {
public:
    UnitQuaternion() = default;
    UnitQuaternion(double w, double x, double y, double z);

    static UnitQuaternion identity() { return {}; }
    static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);
    static UnitQuaternion from_yaw(double yaw);
    // Intrinsic Z-Y-X convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
    static UnitQuaternion from_rpy(double roll, double pitch, double yaw);

    double w() const { return w_; }
    double x() const { return x_; }
    double y() const { return y_; }
    double z() const { return z_; }

    UnitQuaternion operator*(const UnitQuaternion& o) const;
    UnitQuaternion conjugate() const;
    Vec3 rotate(const Vec3& v) const;
    Matrix3 matrix() const;

    // Heading of the rotated x-axis projected on the world xy-plane.
    double yaw() const;

    // Representative with w >= 0; only meaningful for comparisons.
    UnitQuaternion canonical() const;
    // Rotation angle of this * other^-1, in [0, pi].
    double angle_to(const UnitQuaternion& other) const;

private:
    double w_ = 1.0;
    double x_ = 0.0;
    double y_ = 0.0;
    double z_ = 0.0;
};

// Spherical interpolation along the shorter arc; s in [0, 1].
UnitQuaternion slerp(const UnitQuaternion& a, const UnitQuaternion& b, double s);

// Rigid transform mapping points from a source frame into a target frame:
// p_target = rotation * p_source + translation.
struct Pose {
    UnitQuaternion rotation;
    Vec3 translation;

    static Pose identity() { return {}; }
    static Pose from_translation(const Vec3& t) { return {UnitQuaternion::identity(), t}; }
    static Pose from_yaw(double yaw, const Vec3& t = {}) { return {UnitQuaternion::from_yaw(yaw), t}; }
};

// Linear and angular velocity of a frame, both expressed in the world frame.
struct Twist {
    Vec3 linear;
    Vec3 angular;
};

// a ∘ b: apply b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);
Vec3 transform_point(const Pose& p, const Vec3& q);

// Velocity of an agent as seen by an observer rigidly attached to the frame
// described by frame_pose/frame_twist, expressed in that frame's axes.
Vec3 relative_velocity_in_frame(const Vec3& agent_pos_w, const Vec3& agent_vel_w,
                                const Pose& frame_pose, const Twist& frame_twist);

// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

constexpr double kPi = 3.14159265358979323846;
constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }
constexpr double rad_to_deg(double r) { return r * 180.0 / kPi; }

} // namespace flocking
