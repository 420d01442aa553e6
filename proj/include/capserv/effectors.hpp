#pragma once

// Effector geometry and contact: the two-finger soft gripper and the rigid
// flat baseline tool.
//
// Soft finger model: each finger is an inextensible constant-curvature arc
// marched in the cross-section plane of its own axial station. Steps are
// exact circular-arc segments, so total arc length is preserved to FP
// precision. Where a step would cross the limb's wrap circle the finger
// follows the circle instead, sunk by the local shell penetration. Two
// penetration sources: curvature commanded beyond what the wrap circle
// allows (uniform along the wrapped arc) and palm over-travel, which decays
// exponentially along the arc because the root flexes back. The proximal
// collar near the palm carries no washcloth and is excluded from contact.
//
// Electrodes sense through the finger wall, so their sample points live on
// the inner shell surface (the washcloth face) regardless of which face the
// electrode is mounted on; the constant wall offset is absorbed by
// calibration.
//
// The circumferential re-grasp angle only shifts where contact lands on the
// limb (surfaces of revolution), so all pose math runs in the grasp frame
// and the offset is added when mapping to limb angles.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"
#include "limb.hpp"
#include "sensor.hpp"

namespace capserv {

// ---------------------------------------------------------------- soft finger

struct SoftFingerParams {
    double arc_length = kPi * 0.08;  // rest shape is a semicircle of the 0.160 m cradle
    double rest_curvature = 12.5;    // 1/m, rest radius 0.080 m
    double width = 0.030;            // m, along the limb axis
    double wall_thickness = 0.003;   // m
    double foam_depth = 0.010;       // m, washcloth + foam compliance on the shell
    double curvature_gain = 300.0;   // 1/m of curvature per m of tendon travel
    double tendon_max = 0.05;        // m
    double spool_radius = 0.01;      // m, motor angle -> tendon travel
    double curl_gain = 0.002;        // m of shell penetration per unit curvature excess
    double root_fraction = 0.05;     // proximal collar without washcloth contact
    double push_decay_fraction = 1.0 / 12.0;  // palm-push e-folding length / arc length
    int stations = 64;

    void validate() const {
        if (!(arc_length > 0.0) || !(rest_curvature > 0.0) || !(width > 0.0))
            throw ValidationError("soft finger dimensions must be positive");
        if (!(curvature_gain > 0.0) || !(tendon_max > 0.0) || !(spool_radius > 0.0))
            throw ValidationError("soft finger actuation constants must be positive");
        if (!(foam_depth > 0.0) || !(curl_gain > 0.0))
            throw ValidationError("soft finger compliance constants must be positive");
        if (!(root_fraction >= 0.0 && root_fraction < 0.5) || stations < 8)
            throw ValidationError("soft finger discretization invalid");
        if (min_wrap_radius() < 0.03)
            throw ValidationError("tendon_max allows wrap radius below 0.03 m");
    }

    double shell_offset() const { return 0.5 * wall_thickness + foam_depth; }

    // Commanded arc curvature; clamps tendon to its travel range and reports
    // the clamp through *clamped so callers can latch an over-travel flag.
    double curvature(double tendon_disp, bool* clamped = nullptr) const {
        double t = tendon_disp;
        bool hit = false;
        if (t < 0.0) { t = 0.0; hit = true; }
        if (t > tendon_max) { t = tendon_max; hit = true; }
        if (clamped) *clamped = hit;
        return rest_curvature + curvature_gain * t;
    }

    double min_wrap_radius() const { return 1.0 / (rest_curvature + curvature_gain * tendon_max); }
};

struct SkinGripParams {
    SoftFingerParams finger;
    double base_half_separation = 0.015;  // m, finger roots at +-x_b on the palm
    double base_tilt = deg2rad(17.0);     // roots point outward-down at rest
    double finger_axial_offset = 0.0175;  // m, fingers interleave along the limb axis
    double pad_drop = 0.012;              // m, palm pad face below the palm plane
    double pad_depth = 0.030;             // m, pad compliance (bunched washcloth)
    double pad_length = 0.06;             // m, pad extent along the limb axis
    int pad_samples = 7;

    // Electrode arc stations as fractions of arc length.
    std::array<double, 3> back_station_fracs{1.0 / 6.0, 0.5, 5.0 / 6.0};
    double inner_station_frac = 0.10;  // upper third of the inner face, near the root
    double back_width = 0.020;         // m across (limb axis)
    double back_length = 0.065;        // m along the arc
    double inner_width = 0.015;
    double inner_length = 0.025;

    void validate() const {
        finger.validate();
        if (!(base_half_separation > 0.0) || !(finger_axial_offset >= 0.0))
            throw ValidationError("gripper base layout invalid");
        if (!(pad_depth > 0.0) || !(pad_length > 0.0) || pad_samples < 3)
            throw ValidationError("palm pad parameters invalid");
        if (!(inner_station_frac > finger.root_fraction))
            throw ValidationError("inner electrode sits inside the contactless collar");
    }

    // Palm height above the limb axis at which the finger roots rest exactly
    // on the wrap circle of the given limb radius.
    double cradle_height(double limb_radius) const {
        const double rp = limb_radius + finger.shell_offset();
        const double xb = base_half_separation;
        if (rp <= xb) throw ValidationError("limb too small for the finger base separation");
        return std::sqrt(rp * rp - xb * xb);
    }
};

// Pose and actuation state of the gripper in the grasp frame. +roll lowers
// the +x side. grasp_angle is the circumferential re-grasp offset.
struct SkinGripState {
    double z = 0.3;      // palm center height above the limb axis, m
    double roll = 0.0;   // rad
    double axial = 0.0;  // feed position along the limb, m
    double grasp_angle = 0.0;
    std::array<double, 2> theta{0.0, 0.0};  // motor angles {left, right}, rad
    bool over_travel = false;

    double tendon(const SoftFingerParams& f, int side) const {
        return f.spool_radius * theta[static_cast<size_t>(side)];
    }
};

struct FingerStation {
    Vec2 point;         // centerline, cross-section plane
    Vec2 tangent;       // unit
    Vec2 inner_normal;  // unit, toward the curl side
    double arc_pos = 0.0;
    bool wrapped = false;
    double pen = 0.0;       // shell penetration, m
    double pressure = 0.0;  // pen / foam_depth capped at 1
};

struct FingerTrace {
    std::vector<FingerStation> stations;  // stations+1 entries, arc step apart
    double base_push = 0.0;               // palm over-travel into the wrap circle
    double curl_pen = 0.0;
    double wrap_radius = 0.0;  // limb radius + shell offset at this cross-section
    int capped = 0;            // stations past the collar with fully compressed foam

    const FingerStation& at(size_t i) const { return stations[i]; }

    // Linear interpolation along arc position for electrode placement.
    FingerStation sample(double s, double arc_length) const {
        const double ds = arc_length / static_cast<double>(stations.size() - 1);
        double u = clamp(s, 0.0, arc_length) / ds;
        size_t i = static_cast<size_t>(u);
        if (i + 1 >= stations.size()) i = stations.size() - 2;
        const double f = u - static_cast<double>(i);
        const FingerStation& a = stations[i];
        const FingerStation& b = stations[i + 1];
        FingerStation out;
        out.point = a.point * (1.0 - f) + b.point * f;
        Vec2 t = a.tangent * (1.0 - f) + b.tangent * f;
        const double tn = t.norm();
        out.tangent = tn > 0.0 ? t * (1.0 / tn) : a.tangent;
        Vec2 n = a.inner_normal * (1.0 - f) + b.inner_normal * f;
        const double nn = n.norm();
        out.inner_normal = nn > 0.0 ? n * (1.0 / nn) : a.inner_normal;
        out.arc_pos = s;
        out.wrapped = f < 0.5 ? a.wrapped : b.wrapped;
        out.pen = a.pen * (1.0 - f) + b.pen * f;
        out.pressure = a.pressure * (1.0 - f) + b.pressure * f;
        return out;
    }
};

// March one finger in its cross-section plane. The limb cross-section is a
// circle of the given radius centered at the origin. turn_sign +1 curls
// counter-clockwise (left finger), -1 clockwise (right finger).
inline FingerTrace march_finger(const SoftFingerParams& f, Vec2 base, Vec2 base_tangent,
                                double turn_sign, double kappa_cmd, double limb_radius) {
    FingerTrace trace;
    trace.wrap_radius = limb_radius + f.shell_offset();
    const double rp = trace.wrap_radius;
    trace.base_push = std::max(0.0, rp - base.norm());
    trace.curl_pen = f.curl_gain * std::max(0.0, kappa_cmd - 1.0 / rp);
    const double lam = f.push_decay_fraction * f.arc_length;
    const double ds = f.arc_length / f.stations;
    const double s_root = f.root_fraction * f.arc_length;

    auto pen_at = [&](double s) {
        return std::max(trace.curl_pen, trace.base_push * std::exp(-s / lam));
    };
    auto inner_of = [&](const Vec2& t) { return turn_sign > 0.0 ? rot_ccw(t) : rot_cw(t); };

    trace.stations.reserve(static_cast<size_t>(f.stations) + 1);
    Vec2 q = base;
    Vec2 t = base_tangent * (1.0 / base_tangent.norm());

    auto push_station = [&](double s, bool wrapped) {
        FingerStation st;
        st.point = q;
        st.tangent = t;
        st.arc_pos = s;
        st.wrapped = wrapped;
        if (wrapped) {
            const double pen = pen_at(s);
            st.pen = pen;
            st.pressure = std::min(pen / f.foam_depth, 1.0);
            if (pen >= f.foam_depth && s >= s_root) ++trace.capped;
            Vec2 u = q * (1.0 / q.norm());
            st.inner_normal = u * -1.0;
        } else {
            st.inner_normal = inner_of(t);
        }
        trace.stations.push_back(st);
    };

    push_station(0.0, q.norm() <= rp);

    for (int k = 1; k <= f.stations; ++k) {
        const double s_new = ds * k;
        // Free candidate: exact arc segment of the commanded curvature.
        const double dpsi = turn_sign * kappa_cmd * ds;
        const double chord =
            std::abs(kappa_cmd) > 1e-12 ? 2.0 * std::sin(0.5 * kappa_cmd * ds) / kappa_cmd : ds;
        const Vec2 q_free = q + rotate(t, 0.5 * dpsi) * chord;

        if (q_free.norm() <= rp) {
            // Wrapped: advance exactly ds along the penetrated circle,
            // following the current direction of travel around the center.
            const double r_eff = rp - pen_at(s_new);
            Vec2 u = q * (1.0 / q.norm());
            const double cross = u.x * t.z - u.z * t.x;
            const double wrap_sign = cross != 0.0 ? (cross > 0.0 ? 1.0 : -1.0) : turn_sign;
            const Vec2 u_new = rotate(u, wrap_sign * ds / r_eff);
            q = u_new * r_eff;
            t = wrap_sign > 0.0 ? rot_ccw(u_new) : rot_cw(u_new);
            push_station(s_new, true);
        } else {
            q = q_free;
            t = rotate(t, dpsi);
            push_station(s_new, false);
        }
    }
    return trace;
}

// Both finger traces plus derived palm geometry for one control tick.
struct SkinGripRig {
    FingerTrace left;
    FingerTrace right;
    double y_left = 0.0;
    double y_right = 0.0;
    Vec2 palm_center;
    Vec2 palm_axis_x;  // unit +x of the rolled palm
    double grasp_angle = 0.0;
    double kappa_left = 0.0;
    double kappa_right = 0.0;
    bool tendon_clamped = false;
};

inline double clamped_radius(const LimbModel& limb, double y) {
    return limb.radius_at(clamp(y / limb.length, 0.0, 1.0));
}

// Proximity/contact distance used by the effectors. The modeled segment
// stands in for a longer body part, so sensing treats it as a rod that
// continues past both ends at the end radii; inside the segment this equals
// signed_distance exactly. Cream and coverage still live on [0, length].
inline double sensing_distance(const LimbModel& limb, const Vec3& world_point) {
    const Vec3 p = limb.to_limb_frame(world_point);
    const double m = limb.taper_slope();
    const double r = limb.radius_at(clamp(p.y / limb.length, 0.0, 1.0));
    return (std::hypot(p.x, p.z) - r) / std::sqrt(1.0 + m * m);
}

inline SkinGripRig make_rig(const SkinGripParams& g, const SkinGripState& s,
                            const LimbModel& limb) {
    SkinGripRig rig;
    rig.grasp_angle = s.grasp_angle;
    rig.y_left = s.axial - g.finger_axial_offset;
    rig.y_right = s.axial + g.finger_axial_offset;
    rig.palm_center = Vec2{0.0, s.z};
    rig.palm_axis_x = rotate(Vec2{1.0, 0.0}, -s.roll);

    bool clamp_l = false;
    bool clamp_r = false;
    rig.kappa_left = g.finger.curvature(s.tendon(g.finger, 0), &clamp_l);
    rig.kappa_right = g.finger.curvature(s.tendon(g.finger, 1), &clamp_r);
    rig.tendon_clamped = clamp_l || clamp_r;

    const double ct = std::cos(g.base_tilt);
    const double st = std::sin(g.base_tilt);
    const Vec2 base_l = rig.palm_center + rotate(Vec2{-g.base_half_separation, 0.0}, -s.roll);
    const Vec2 base_r = rig.palm_center + rotate(Vec2{+g.base_half_separation, 0.0}, -s.roll);
    const Vec2 tan_l = rotate(Vec2{-ct, -st}, -s.roll);
    const Vec2 tan_r = rotate(Vec2{+ct, -st}, -s.roll);

    rig.left = march_finger(g.finger, base_l, tan_l, +1.0, rig.kappa_left,
                            clamped_radius(limb, rig.y_left));
    rig.right = march_finger(g.finger, base_r, tan_r, -1.0, rig.kappa_right,
                             clamped_radius(limb, rig.y_right));
    return rig;
}

// ------------------------------------------------------------- electrode I/O

struct ElectrodePose {
    Vec3 position;
    Vec3 normal;
    std::string label;
};

namespace detail {

// Shell sample point of a finger station in the limb frame (grasp frame
// rotated later only through the phi offset; distances are rotation
// invariant so the grasp angle never enters here).
inline Vec3 shell_point(const FingerStation& st, double shell_offset, double y) {
    const Vec2 p = st.point + st.inner_normal * shell_offset;
    return Vec3{p.x, y, p.z};
}

inline ElectrodePatch finger_patch(const FingerTrace& trace, const SoftFingerParams& f,
                                   double s_center, double along, double across, double y_center,
                                   const LimbModel& limb) {
    ElectrodePatch patch;
    int idx = 0;
    for (int ia = -1; ia <= 1; ++ia) {
        const FingerStation st = trace.sample(s_center + 0.5 * along * ia, f.arc_length);
        for (int iy = -1; iy <= 1; ++iy) {
            const Vec3 p = shell_point(st, f.shell_offset(), y_center + 0.5 * across * iy);
            patch.samples[static_cast<size_t>(idx++)].distance = sensing_distance(limb, p);
        }
    }
    const FingerStation center = trace.sample(s_center, f.arc_length);
    patch.local_pressure = center.wrapped ? center.pressure : 0.0;
    return patch;
}

}  // namespace detail

// Raw geometry inputs for the 8 gripper electrodes, device label order:
// 1-3 left top/middle/bottom (back), 4-6 right, 7 left inner, 8 right inner.
inline std::array<ElectrodePatch, 8> skin_grip_patches(const SkinGripParams& g,
                                                       const SkinGripRig& rig,
                                                       const LimbModel& limb) {
    std::array<ElectrodePatch, 8> out;
    const double sf = g.finger.arc_length;
    for (int i = 0; i < 3; ++i) {
        const double s = g.back_station_fracs[static_cast<size_t>(i)] * sf;
        out[static_cast<size_t>(i)] = detail::finger_patch(rig.left, g.finger, s, g.back_length,
                                                           g.back_width, rig.y_left, limb);
        out[static_cast<size_t>(i + 3)] = detail::finger_patch(
            rig.right, g.finger, s, g.back_length, g.back_width, rig.y_right, limb);
    }
    const double s_in = g.inner_station_frac * sf;
    out[6] = detail::finger_patch(rig.left, g.finger, s_in, g.inner_length, g.inner_width,
                                  rig.y_left, limb);
    out[7] = detail::finger_patch(rig.right, g.finger, s_in, g.inner_length, g.inner_width,
                                  rig.y_right, limb);
    return out;
}

// Mount poses in the limb frame (grasp rotation applied about the limb axis).
inline std::vector<ElectrodePose> electrode_poses(const SkinGripParams& g,
                                                  const SkinGripRig& rig) {
    auto place = [&](const FingerTrace& trace, double s, double y, bool inner_face,
                     const std::string& label) {
        const FingerStation st = trace.sample(s, g.finger.arc_length);
        const double off = 0.5 * g.finger.wall_thickness;
        const Vec2 n2 = inner_face ? st.inner_normal : st.inner_normal * -1.0;
        const Vec2 p2 = st.point + n2 * off;
        const double c = std::cos(rig.grasp_angle);
        const double sn = std::sin(rig.grasp_angle);
        // rotate about the limb axis: phi = atan2(x, z) + grasp_angle
        ElectrodePose pose;
        pose.position = Vec3{p2.x * c + p2.z * sn, y, -p2.x * sn + p2.z * c};
        pose.normal = Vec3{n2.x * c + n2.z * sn, 0.0, -n2.x * sn + n2.z * c};
        pose.label = label;
        return pose;
    };
    const double sf = g.finger.arc_length;
    std::vector<ElectrodePose> poses;
    poses.reserve(8);
    static const char* kBackNames[3] = {"top", "middle", "bottom"};
    for (int i = 0; i < 3; ++i)
        poses.push_back(place(rig.left, g.back_station_fracs[static_cast<size_t>(i)] * sf,
                              rig.y_left, false,
                              std::to_string(i + 1) + "-left " + kBackNames[i]));
    for (int i = 0; i < 3; ++i)
        poses.push_back(place(rig.right, g.back_station_fracs[static_cast<size_t>(i)] * sf,
                              rig.y_right, false,
                              std::to_string(i + 4) + "-right " + kBackNames[i]));
    poses.push_back(place(rig.left, g.inner_station_frac * sf, rig.y_left, true, "7-left inner"));
    poses.push_back(
        place(rig.right, g.inner_station_frac * sf, rig.y_right, true, "8-right inner"));
    return poses;
}

// ----------------------------------------------------------------- contact map

struct ContactPatch {
    bool in_contact = false;
    double pressure = 0.0;  // pressure proxy in [0, 1]
    double phi = 0.0;       // limb angle of the patch center (grasp offset applied)
    double phi_half = 0.0;  // half angular footprint
    double y_lo = 0.0;
    double y_hi = 0.0;
    Vec3 location;
};

struct ContactMap {
    std::vector<ContactPatch> patches;
    int over_pressure = 0;  // patches at fully compressed compliance this tick
};

namespace detail {

inline void add_patch(ContactMap& map, double pressure, double phi, double phi_half, double y_lo,
                      double y_hi, const Vec3& loc, bool capped) {
    ContactPatch p;
    p.in_contact = pressure > 0.0;
    p.pressure = pressure;
    p.phi = wrap_angle(phi);
    p.phi_half = phi_half;
    p.y_lo = y_lo;
    p.y_hi = y_hi;
    p.location = loc;
    if (capped) ++map.over_pressure;
    map.patches.push_back(p);
}

inline void finger_contacts(ContactMap& map, const FingerTrace& trace, const SoftFingerParams& f,
                            double y_center, double grasp_angle, double limb_radius) {
    const double s_root = f.root_fraction * f.arc_length;
    const double ds = f.arc_length / f.stations;
    for (const FingerStation& st : trace.stations) {
        if (st.arc_pos < s_root || !st.wrapped || st.pressure <= 0.0) continue;
        const double r_contact = std::max(limb_radius - st.pen, 1e-6);
        const double phi = std::atan2(st.point.x, st.point.z) + grasp_angle;
        const Vec3 loc{st.point.x, y_center, st.point.z};
        add_patch(map, st.pressure, phi, 0.5 * ds / r_contact, y_center - 0.5 * f.width,
                  y_center + 0.5 * f.width, loc, st.pen >= f.foam_depth);
    }
}

}  // namespace detail

// Contact patches of both fingers plus the palm pad for one tick.
inline ContactMap contact_map(const SkinGripParams& g, const SkinGripRig& rig,
                              const LimbModel& limb) {
    ContactMap map;
    detail::finger_contacts(map, rig.left, g.finger, rig.y_left, rig.grasp_angle,
                            clamped_radius(limb, rig.y_left));
    detail::finger_contacts(map, rig.right, g.finger, rig.y_right, rig.grasp_angle,
                            clamped_radius(limb, rig.y_right));

    // Palm pad: compliant strip between the finger roots, wiping the top seam.
    const double y_pad = 0.5 * (rig.y_left + rig.y_right);
    const double r_pad = clamped_radius(limb, y_pad);
    const int n = g.pad_samples;
    const double xb = g.base_half_separation;
    const double dx = 2.0 * xb / n;
    const Vec2 roll_x = rig.palm_axis_x;
    const Vec2 roll_z = rot_ccw(roll_x);  // unit +z of the rolled palm
    for (int i = 0; i < n; ++i) {
        const double a = -xb + dx * (i + 0.5);
        const Vec2 p = rig.palm_center + roll_x * a - roll_z * g.pad_drop;
        const double pen = r_pad - p.norm();
        if (pen <= 0.0) continue;
        const double pressure = std::min(pen / g.pad_depth, 1.0);
        const double phi = std::atan2(p.x, p.z) + rig.grasp_angle;
        detail::add_patch(map, pressure, phi, 0.5 * dx / r_pad, y_pad - 0.5 * g.pad_length,
                          y_pad + 0.5 * g.pad_length, Vec3{p.x, y_pad, p.z},
                          pen >= g.pad_depth);
    }
    return map;
}

// Fraction of the washcloth-covered inner surface within contact tolerance
// (1 mm) of the skin or penetrating it.
inline double wrap_fraction(const SkinGripParams& g, const SkinGripRig& rig,
                            const LimbModel& limb) {
    const double s_root = g.finger.root_fraction * g.finger.arc_length;
    const double off = g.finger.shell_offset();
    int total = 0;
    int touching = 0;
    auto scan = [&](const FingerTrace& trace, double y) {
        for (const FingerStation& st : trace.stations) {
            if (st.arc_pos < s_root) continue;
            ++total;
            const Vec3 p = detail::shell_point(st, off, y);
            if (sensing_distance(limb, p) <= 1e-3) ++touching;
        }
    };
    scan(rig.left, rig.y_left);
    scan(rig.right, rig.y_right);
    return total > 0 ? static_cast<double>(touching) / total : 0.0;
}

// ------------------------------------------------------------------ rigid tool

// Flat plate wrapped in a folded towel. The towel stack is thicker than the
// gripper's fitted washcloth, which keeps the fixed-step approach descent
// from bottoming out the compliance before the depth servo takes over.
//
// Electrode labels follow the lateral/axial roles of the error combinations:
// corner pairs 1/3 (front) and 4/6 (back) straddle the centerline at a small
// inset so lateral offset reads as left-right imbalance, and the middle pair
// 2/5 sits wide to give depth and roll their own signal.
struct RigidToolParams {
    double plate_width = 0.10;   // m across the limb (x)
    double plate_length = 0.15;  // m along the limb (y)
    double foam_depth = 0.020;   // m, towel compliance
    double corner_inset = 0.008;      // m, |x| of electrodes 1, 3, 4, 6
    double mid_offset = 0.030;        // m, |x| of electrodes 2, 5
    double row_offset = 0.050;        // m, |y| of the front/back rows
    double electrode_width = 0.020;   // m along x
    double electrode_length = 0.040;  // m along y
    int grid_nx = 25;
    int grid_ny = 15;

    void validate() const {
        if (!(plate_width > 0.0) || !(plate_length > 0.0) || !(foam_depth > 0.0))
            throw ValidationError("rigid plate dimensions must be positive");
        if (!(mid_offset + 0.5 * electrode_width <= 0.5 * plate_width) ||
            !(row_offset + 0.5 * electrode_length <= 0.5 * plate_length))
            throw ValidationError("rigid electrodes fall outside the plate");
        if (grid_nx < 5 || grid_ny < 3)
            throw ValidationError("rigid contact grid too coarse");
    }

    // Electrode face centers in the plate frame, device label order 1..6.
    std::array<Vec2, 6> electrode_centers() const {
        return {Vec2{-corner_inset, row_offset},  Vec2{-mid_offset, 0.0},
                Vec2{corner_inset, row_offset},   Vec2{-corner_inset, -row_offset},
                Vec2{mid_offset, 0.0},            Vec2{corner_inset, -row_offset}};
    }
};

// Pose of the plate in the grasp frame; +roll lowers the +x edge, +yaw turns
// the plate's long axis toward +x.
struct RigidToolState {
    double x = 0.0;
    double z = 0.3;       // plate face height above the limb axis
    double yaw = 0.0;     // rad, about the vertical
    double roll = 0.0;    // rad, about the limb axis
    double axial = 0.0;   // feed position, m
    double grasp_angle = 0.0;
};

struct RigidRig {
    Vec3 base;  // face center, limb frame before grasp rotation
    Vec3 u;     // unit, plate +x direction
    Vec3 v;     // unit, plate +y direction
    double grasp_angle = 0.0;
};

inline RigidRig make_rig(const RigidToolParams&, const RigidToolState& s) {
    RigidRig rig;
    rig.grasp_angle = s.grasp_angle;
    const double ca = std::cos(s.yaw);
    const double sa = std::sin(s.yaw);
    const double cg = std::cos(s.roll);
    const double sg = std::sin(s.roll);
    // yaw about the vertical, then roll about the limb axis; the plate tilts
    // about its own center so pose deltas stay decoupled
    rig.u = Vec3{ca * cg, sa, -ca * sg};
    rig.v = Vec3{-sa * cg, ca, sa * sg};
    rig.base = Vec3{s.x, s.axial, s.z};
    return rig;
}

inline Vec3 plate_point(const RigidRig& rig, double a, double b) {
    return rig.base + rig.u * a + rig.v * b;
}

inline ElectrodePatch rigid_patch(const RigidToolParams& t, const RigidRig& rig, Vec2 center,
                                  const LimbModel& limb) {
    ElectrodePatch patch;
    int idx = 0;
    for (int ia = -1; ia <= 1; ++ia)
        for (int ib = -1; ib <= 1; ++ib) {
            const Vec3 p = plate_point(rig, center.x + 0.5 * t.electrode_width * ia,
                                       center.z + 0.5 * t.electrode_length * ib);
            patch.samples[static_cast<size_t>(idx++)].distance = sensing_distance(limb, p);
        }
    const double pen = -sensing_distance(limb, plate_point(rig, center.x, center.z));
    patch.local_pressure = pen > 0.0 ? std::min(pen / t.foam_depth, 1.0) : 0.0;
    return patch;
}

// Raw geometry inputs for the 6 plate electrodes, device label order.
inline std::array<ElectrodePatch, 6> rigid_tool_patches(const RigidToolParams& t,
                                                        const RigidRig& rig,
                                                        const LimbModel& limb) {
    std::array<ElectrodePatch, 6> out;
    const auto centers = t.electrode_centers();
    for (size_t i = 0; i < 6; ++i) out[i] = rigid_patch(t, rig, centers[i], limb);
    return out;
}

inline std::vector<ElectrodePose> electrode_poses(const RigidToolParams& t, const RigidRig& rig) {
    static const char* kNames[6] = {"1-left front", "2-left middle", "3-right front",
                                    "4-left back",  "5-right middle", "6-right back"};
    const Vec3 down = Vec3{rig.u.y * rig.v.z - rig.u.z * rig.v.y,
                           rig.u.z * rig.v.x - rig.u.x * rig.v.z,
                           rig.u.x * rig.v.y - rig.u.y * rig.v.x} *
                      -1.0;
    std::vector<ElectrodePose> poses;
    poses.reserve(6);
    const auto centers = t.electrode_centers();
    const double c = std::cos(rig.grasp_angle);
    const double sn = std::sin(rig.grasp_angle);
    for (size_t i = 0; i < 6; ++i) {
        const Vec3 p = plate_point(rig, centers[i].x, centers[i].z);
        ElectrodePose pose;
        pose.position = Vec3{p.x * c + p.z * sn, p.y, -p.x * sn + p.z * c};
        pose.normal = Vec3{down.x * c + down.z * sn, down.y, -down.x * sn + down.z * c};
        pose.label = kNames[i];
        poses.push_back(pose);
    }
    return poses;
}

// Contact of the towel face sampled on a regular grid over the plate.
inline ContactMap contact_map(const RigidToolParams& t, const RigidRig& rig,
                              const LimbModel& limb) {
    ContactMap map;
    const double da = t.plate_width / t.grid_nx;
    const double db = t.plate_length / t.grid_ny;
    for (int i = 0; i < t.grid_nx; ++i)
        for (int j = 0; j < t.grid_ny; ++j) {
            const double a = -0.5 * t.plate_width + da * (i + 0.5);
            const double b = -0.5 * t.plate_length + db * (j + 0.5);
            const Vec3 p = plate_point(rig, a, b);
            const double pen = -sensing_distance(limb, p);
            if (pen <= 0.0) continue;
            const double pressure = std::min(pen / t.foam_depth, 1.0);
            const double r = clamped_radius(limb, p.y);
            const double phi = std::atan2(p.x, p.z) + rig.grasp_angle;
            detail::add_patch(map, pressure, phi, 0.5 * da / r, p.y - 0.5 * db, p.y + 0.5 * db,
                              p, pen >= t.foam_depth);
        }
    return map;
}

}  // namespace capserv
