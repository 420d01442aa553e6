#pragma once

// Small fixed-size vector/transform helpers shared by the limb and effector
// geometry. Nothing here knows about sensing or control.

#include <array>
#include <cmath>

namespace capserv {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

template <typename T>
inline T clamp(T v, T lo, T hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

// Wrap an angle to [-pi, pi). In-range angles pass through bitwise so that
// exact boundary comparisons (view partitions, grid seams) stay exact.
inline double wrap_angle(double a) {
    if (a >= -kPi && a < kPi) return a;
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a < 0.0) a += 2.0 * kPi;
    return a - kPi;
}

struct Vec2 {
    double x = 0.0;
    double z = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, z + o.z}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, z - o.z}; }
    Vec2 operator*(double s) const { return {x * s, z * s}; }
    double norm() const { return std::hypot(x, z); }
};

// 90 degree rotations used when walking finger arcs.
inline Vec2 rot_ccw(const Vec2& v) { return {-v.z, v.x}; }
inline Vec2 rot_cw(const Vec2& v) { return {v.z, -v.x}; }

inline Vec2 rotate(const Vec2& v, double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {c * v.x - s * v.z, s * v.x + c * v.z};
}

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

// Rigid placement of the limb in the world. Only a translation plus a yaw
// about the vertical is ever needed by the harness, but the full rotation is
// kept so placements stay composable.
struct RigidTransform {
    std::array<double, 9> r = {1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
    Vec3 t;

    Vec3 apply(const Vec3& p) const {
        return {r[0] * p.x + r[1] * p.y + r[2] * p.z + t.x,
                r[3] * p.x + r[4] * p.y + r[5] * p.z + t.y,
                r[6] * p.x + r[7] * p.y + r[8] * p.z + t.z};
    }

    // Rotation matrices stay orthonormal, so the inverse is the transpose.
    Vec3 apply_inverse(const Vec3& p) const {
        const Vec3 q = {p.x - t.x, p.y - t.y, p.z - t.z};
        return {r[0] * q.x + r[3] * q.y + r[6] * q.z,
                r[1] * q.x + r[4] * q.y + r[7] * q.z,
                r[2] * q.x + r[5] * q.y + r[8] * q.z};
    }
};

inline RigidTransform translation(const Vec3& t) {
    RigidTransform tf;
    tf.t = t;
    return tf;
}

}  // namespace capserv
