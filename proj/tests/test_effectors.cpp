#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "capserv/effectors.hpp"

using namespace capserv;
using Catch::Approx;

namespace {

SkinGripState grasp_state(const SkinGripParams& g, const LimbModel& limb, double theta) {
    SkinGripState s;
    s.z = g.cradle_height(limb.radius_at(0.0));
    s.theta = {theta, theta};
    return s;
}

}  // namespace

TEST_CASE("tendon curvature is linear and clamped") {
    const SoftFingerParams f;
    bool clamped = true;
    CHECK(f.curvature(0.0, &clamped) == 12.5);
    CHECK(!clamped);
    CHECK(f.curvature(0.02) == 18.5);
    CHECK(f.curvature(0.05) == 27.5);
    CHECK(f.curvature(-0.01, &clamped) == 12.5);
    CHECK(clamped);
    CHECK(f.curvature(0.06, &clamped) == 27.5);
    CHECK(clamped);
    CHECK(f.min_wrap_radius() == Approx(0.03636363636363636).epsilon(1e-14));
    CHECK_NOTHROW(f.validate());

    SoftFingerParams loose = f;
    loose.tendon_max = 0.2;  // would curl tighter than any safe limb
    CHECK_THROWS_AS(loose.validate(), ValidationError);
}

TEST_CASE("free march reproduces the closed-form arc") {
    const SoftFingerParams f;
    // Base far from the origin so the wrap circle never captures the arc.
    const FingerTrace trace = march_finger(f, {1.0, 0.0}, {0.0, -1.0}, +1.0, 12.5, 0.001);
    REQUIRE(trace.stations.size() == static_cast<size_t>(f.stations) + 1);

    // kappa * arc_length = pi: a semicircle of radius 0.08 ending at base + 2R n.
    const Vec2 end = trace.stations.back().point;
    CHECK(end.x == Approx(1.16).margin(1e-12));
    CHECK(end.z == Approx(0.0).margin(1e-12));

    // Every station sits on the circle about base + R n, R = 0.08.
    const Vec2 center{1.08, 0.0};
    for (const auto& st : trace.stations) {
        CHECK((st.point - center).norm() == Approx(0.08).margin(1e-12));
        CHECK(st.tangent.norm() == Approx(1.0).margin(1e-12));
        CHECK(!st.wrapped);
        CHECK(st.pressure == 0.0);
    }

    // Zero curvature marches a straight line.
    const FingerTrace line = march_finger(f, {1.0, 0.0}, {0.0, 1.0}, +1.0, 0.0, 0.001);
    CHECK(line.stations.back().point.x == Approx(1.0).margin(1e-12));
    CHECK(line.stations.back().point.z == Approx(f.arc_length).margin(1e-12));
}

TEST_CASE("wrapped march rides the penetrated circle") {
    const SoftFingerParams f;
    const double r_limb = 0.05;
    const double rp = r_limb + f.shell_offset();

    // Commanded curl tighter than the wrap circle: every station stays
    // captured and rides at constant curl penetration.
    const FingerTrace wrap = march_finger(f, {0.0, rp}, {1.0, 0.0}, -1.0, 18.5, r_limb);
    CHECK(wrap.base_push == 0.0);
    CHECK(wrap.curl_pen == Approx(0.002 * (18.5 - 1.0 / rp)).epsilon(1e-12));
    CHECK(wrap.capped == 0);  // 4.5 mm curl < 10 mm foam
    // Station 0 is pinned at the base point; every later station has marched
    // down onto the penetrated circle.
    CHECK(wrap.stations.front().point.norm() == Approx(rp).margin(1e-12));
    for (const auto& st : wrap.stations) {
        REQUIRE(st.wrapped);
        CHECK(st.pressure == Approx(wrap.curl_pen / f.foam_depth).epsilon(1e-12));
    }
    for (std::size_t i = 1; i < wrap.stations.size(); ++i)
        CHECK(wrap.stations[i].point.norm() == Approx(rp - wrap.curl_pen).margin(1e-12));

    // Rest curvature is flatter than the circle: the finger lifts off.
    const FingerTrace lift = march_finger(f, {0.0, rp}, {1.0, 0.0}, -1.0, 12.5, r_limb);
    CHECK(lift.stations.front().wrapped);
    CHECK(!lift.stations.back().wrapped);
    CHECK(lift.stations.back().point.norm() > rp);

    // A pressed-in base reports its over-travel as decaying push penetration.
    const FingerTrace push = march_finger(f, {0.0, rp - 0.005}, {1.0, 0.0}, -1.0, 12.5, r_limb);
    CHECK(push.base_push == Approx(0.005).margin(1e-15));
    CHECK(push.stations.front().pen == Approx(0.005).margin(1e-15));
    CHECK(push.stations.front().pressure == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("curl past the wrap curvature compresses the foam") {
    const SoftFingerParams f;
    const double r_limb = 0.05;
    const double rp = r_limb + f.shell_offset();
    const FingerTrace trace = march_finger(f, {0.0, rp}, {1.0, 0.0}, -1.0, 27.5, r_limb);
    CHECK(trace.curl_pen == Approx(0.02247967479674797).epsilon(1e-12));
    CHECK(trace.capped > 0);  // past the foam depth
    bool saturated = false;
    for (const auto& st : trace.stations)
        if (st.wrapped && st.pressure == 1.0) saturated = true;
    CHECK(saturated);
}

TEST_CASE("cradle height closed form") {
    const SkinGripParams g;
    CHECK(g.cradle_height(0.05) == Approx(0.05964268605621314).epsilon(1e-14));
    SkinGripParams wide = g;
    wide.base_half_separation = 0.08;
    CHECK_THROWS_AS(wide.cradle_height(0.05), ValidationError);
    CHECK_NOTHROW(g.validate());

    SkinGripParams bad = g;
    bad.inner_station_frac = 0.01;  // inside the contactless collar
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("rig wiring: axial offsets, tendon clamp latch") {
    const SkinGripParams g;
    const LimbModel limb = build_limb(0.10, 0.10, 0.30);
    SkinGripState s = grasp_state(g, limb, 0.0);
    s.axial = 0.12;
    const SkinGripRig rig = make_rig(g, s, limb);
    CHECK(rig.y_left == Approx(0.12 - 0.0175).epsilon(1e-14));
    CHECK(rig.y_right == Approx(0.12 + 0.0175).epsilon(1e-14));
    CHECK(rig.kappa_left == 12.5);
    CHECK(!rig.tendon_clamped);

    s.theta = {6.0, 0.0};  // tendon 0.06 > 0.05 travel
    CHECK(make_rig(g, s, limb).tendon_clamped);
    CHECK(make_rig(g, s, limb).kappa_left == 27.5);
}

TEST_CASE("fingers mirror bitwise over a centered cylinder") {
    const SkinGripParams g;
    const LimbModel limb = build_limb(0.10, 0.10, 0.30);
    for (double theta : {0.0, 1.0, 2.5}) {
        const SkinGripRig rig = make_rig(g, grasp_state(g, limb, theta), limb);
        REQUIRE(rig.left.stations.size() == rig.right.stations.size());
        for (size_t i = 0; i < rig.left.stations.size(); ++i) {
            const auto& l = rig.left.stations[i];
            const auto& r = rig.right.stations[i];
            CHECK(l.point.x == -r.point.x);
            CHECK(l.point.z == r.point.z);
            CHECK(l.pen == r.pen);
            CHECK(l.pressure == r.pressure);
            CHECK(l.wrapped == r.wrapped);
        }

        // Same-label electrodes on the two fingers read identical distances.
        const auto patches = skin_grip_patches(g, rig, limb);
        for (int e = 0; e < 3; ++e)
            for (int k = 0; k < kPatchSamples; ++k)
                CHECK(patches[e].samples[k].distance ==
                      patches[e + 3].samples[k].distance);
        for (int k = 0; k < kPatchSamples; ++k)
            CHECK(patches[6].samples[k].distance == patches[7].samples[k].distance);
    }
}

TEST_CASE("electrode poses: counts, labels, placement") {
    const SkinGripParams g;
    const LimbModel limb = build_limb(0.10, 0.10, 0.30);
    const SkinGripRig rig = make_rig(g, grasp_state(g, limb, 1.5), limb);
    const auto poses = electrode_poses(g, rig);
    REQUIRE(poses.size() == 8);
    CHECK(poses[0].label == "1-left top");
    CHECK(poses[1].label == "2-left middle");
    CHECK(poses[2].label == "3-left bottom");
    CHECK(poses[3].label == "4-right top");
    CHECK(poses[4].label == "5-right middle");
    CHECK(poses[5].label == "6-right bottom");
    CHECK(poses[6].label == "7-left inner");
    CHECK(poses[7].label == "8-right inner");

    // Back electrodes face away from the limb axis, inner ones toward it.
    for (int i = 0; i < 6; ++i)
        CHECK(poses[i].normal.x * poses[i].position.x +
                  poses[i].normal.z * poses[i].position.z > 0.0);
    for (int i = 6; i < 8; ++i)
        CHECK(poses[i].normal.x * poses[i].position.x +
                  poses[i].normal.z * poses[i].position.z < 0.0);

    // Top stations sit higher than middle, middle higher than bottom.
    CHECK(poses[0].position.z > poses[1].position.z);
    CHECK(poses[1].position.z > poses[2].position.z);
    // Inner electrodes live near the root, on the upper half.
    CHECK(poses[6].position.z > 0.0);
    CHECK(poses[7].position.z > 0.0);
    // Left/right electrodes carry the finger axial stations.
    CHECK(poses[0].position.y == Approx(rig.y_left).epsilon(1e-14));
    CHECK(poses[3].position.y == Approx(rig.y_right).epsilon(1e-14));
}

TEST_CASE("grasp angle spins electrode poses about the limb axis") {
    const SkinGripParams g;
    const LimbModel limb = build_limb(0.10, 0.10, 0.30);
    SkinGripState s = grasp_state(g, limb, 1.5);
    const auto base = electrode_poses(g, make_rig(g, s, limb));
    s.grasp_angle = deg2rad(60.0);
    const auto turned = electrode_poses(g, make_rig(g, s, limb));
    for (size_t i = 0; i < base.size(); ++i) {
        const double phi0 = std::atan2(base[i].position.x, base[i].position.z);
        const double phi1 = std::atan2(turned[i].position.x, turned[i].position.z);
        CHECK(wrap_angle(phi1 - phi0) == Approx(deg2rad(60.0)).margin(1e-12));
        // Radius and axial station stay put.
        CHECK(std::hypot(turned[i].position.x, turned[i].position.z) ==
              Approx(std::hypot(base[i].position.x, base[i].position.z)).margin(1e-12));
        CHECK(turned[i].position.y == base[i].position.y);
    }
}

TEST_CASE("soft contact map is symmetric and quiet at the cradle") {
    const SkinGripParams g;
    const LimbModel limb = build_limb(0.10, 0.10, 0.30);
    const SkinGripRig rig = make_rig(g, grasp_state(g, limb, 2.0), limb);
    const ContactMap map = contact_map(g, rig, limb);
    CHECK(!map.patches.empty());
    CHECK(map.over_pressure == 0);

    double left = 0.0, right = 0.0;
    for (const auto& p : map.patches) {
        CHECK(p.pressure >= 0.0);
        CHECK(p.pressure <= 1.0);
        CHECK(p.phi_half > 0.0);
        CHECK(p.y_hi > p.y_lo);
        if (p.location.x < -1e-9) left += p.pressure;
        if (p.location.x > 1e-9) right += p.pressure;
    }
    CHECK(left == Approx(right).margin(1e-12));
    CHECK(left > 0.0);
}

TEST_CASE("wrap fraction: open in free space, closed on the limb") {
    const SkinGripParams g;
    const LimbModel limb = build_limb(0.10, 0.10, 0.30);
    SkinGripState far;
    far.z = 0.3;
    CHECK(wrap_fraction(g, make_rig(g, far, limb), limb) == 0.0);

    const SkinGripRig rig = make_rig(g, grasp_state(g, limb, 2.0), limb);
    CHECK(wrap_fraction(g, rig, limb) >= 0.95);
}

TEST_CASE("grasp angle leaves raw patch distances unchanged") {
    // Distances are rotation-invariant; the grasp offset only relabels angles.
    const SkinGripParams g;
    const LimbModel limb = build_limb(0.10, 0.10, 0.30);
    SkinGripState s = grasp_state(g, limb, 1.5);
    const auto p0 = skin_grip_patches(g, make_rig(g, s, limb), limb);
    s.grasp_angle = deg2rad(-60.0);
    const auto p1 = skin_grip_patches(g, make_rig(g, s, limb), limb);
    for (size_t e = 0; e < 8; ++e)
        for (int k = 0; k < kPatchSamples; ++k)
            CHECK(p0[e].samples[k].distance == p1[e].samples[k].distance);
}

TEST_CASE("rod-extended sensing matches the surface distance on the segment") {
    const LimbModel frus = build_limb(0.14, 0.10, 0.30);
    std::mt19937_64 rng(7);
    for (int k = 0; k < 10000; ++k) {
        const Vec3 p{0.4 * unit_double(rng) - 0.2, 0.3 * unit_double(rng),
                     0.4 * unit_double(rng) - 0.2};
        CHECK(sensing_distance(frus, p) == signed_distance(frus, p));
    }

    // Past the tip the rod keeps the tip radius instead of folding the gap in.
    const Vec3 past_tip{0.0, 0.40, 0.08};
    CHECK(sensing_distance(frus, past_tip) ==
          Approx(0.03 / std::sqrt(1.0 + frus.taper_slope() * frus.taper_slope()))
              .epsilon(1e-12));
    CHECK(sensing_distance(frus, past_tip) < signed_distance(frus, past_tip));
    // And before the base it keeps the base radius.
    const Vec3 behind{0.0, -0.05, 0.09};
    CHECK(sensing_distance(frus, behind) ==
          Approx(0.02 / std::sqrt(1.0 + frus.taper_slope() * frus.taper_slope()))
              .epsilon(1e-12));
}

TEST_CASE("rigid rig frame stays orthonormal") {
    const RigidToolParams t;
    CHECK_NOTHROW(t.validate());
    RigidToolState s;
    s.z = 0.05;
    const RigidRig flat = make_rig(t, s);
    CHECK(flat.u.x == 1.0);
    CHECK(flat.u.y == 0.0);
    CHECK(flat.v.y == 1.0);

    s.yaw = 0.15;
    s.roll = -0.1;
    const RigidRig rig = make_rig(t, s);
    CHECK(dot(rig.u, rig.v) == Approx(0.0).margin(1e-15));
    CHECK(rig.u.norm() == Approx(1.0).margin(1e-15));
    CHECK(rig.v.norm() == Approx(1.0).margin(1e-15));
}

TEST_CASE("rigid electrode layout and poses") {
    const RigidToolParams t;
    const auto centers = t.electrode_centers();
    // Corner pairs straddle the centerline at the inset; middles sit wide.
    CHECK(centers[0].x == -t.corner_inset);
    CHECK(centers[2].x == t.corner_inset);
    CHECK(centers[0].z == t.row_offset);
    CHECK(centers[3].z == -t.row_offset);
    CHECK(centers[1].x == -t.mid_offset);
    CHECK(centers[4].x == t.mid_offset);

    RigidToolState s;
    s.z = 0.06;
    const RigidRig rig = make_rig(t, s);
    const auto poses = electrode_poses(t, rig);
    REQUIRE(poses.size() == 6);
    CHECK(poses[0].label == "1-left front");
    CHECK(poses[1].label == "2-left middle");
    CHECK(poses[2].label == "3-right front");
    CHECK(poses[3].label == "4-left back");
    CHECK(poses[4].label == "5-right middle");
    CHECK(poses[5].label == "6-right back");

    // All six faces are coplanar on the plate and point down at the limb.
    for (const auto& p : poses) {
        CHECK(p.position.z == Approx(0.06).margin(1e-15));
        CHECK(p.normal.z == Approx(-1.0).margin(1e-15));
    }
}

TEST_CASE("rigid patches mirror across the centerline") {
    const RigidToolParams t;
    const LimbModel limb = build_limb(0.10, 0.10, 0.30);
    RigidToolState s;
    s.z = 0.055;
    s.axial = 0.15;
    const auto patches = rigid_tool_patches(t, make_rig(t, s), limb);
    for (int k = 0; k < kPatchSamples; ++k) {
        CHECK(patches[0].samples[k].distance > 0.0);
    }
    // 1<->3, 2<->5, 4<->6 by x symmetry (sample grids traverse mirrored order).
    auto min_dist = [](const ElectrodePatch& p) {
        double m = 1e9;
        for (const auto& sm : p.samples) m = std::min(m, sm.distance);
        return m;
    };
    CHECK(min_dist(patches[0]) == Approx(min_dist(patches[2])).margin(1e-15));
    CHECK(min_dist(patches[1]) == Approx(min_dist(patches[4])).margin(1e-15));
    CHECK(min_dist(patches[3]) == Approx(min_dist(patches[5])).margin(1e-15));

    // Hand value: middle electrode center over a 0.05 cylinder at z = 0.05.
    s.z = 0.05;
    const auto touching = rigid_tool_patches(t, make_rig(t, s), limb);
    CHECK(touching[1].samples[4].distance ==
          Approx(0.008309518948453005).epsilon(1e-12));
}

TEST_CASE("rolled plate loads the lowered column") {
    const RigidToolParams t;
    const LimbModel limb = build_limb(0.10, 0.10, 0.30);
    RigidToolState s;
    s.z = 0.048;
    s.axial = 0.15;
    s.roll = deg2rad(5.0);  // +roll lowers the +x side
    const ContactMap map = contact_map(t, make_rig(t, s), limb);
    REQUIRE(!map.patches.empty());
    double left = 0.0, right = 0.0;
    int nl = 0, nr = 0;
    for (const auto& p : map.patches) {
        if (p.location.x < -0.005) { left += p.pressure; ++nl; }
        if (p.location.x > 0.005) { right += p.pressure; ++nr; }
    }
    CHECK(nr > 0);
    const double mean_left = nl > 0 ? left / nl : 0.0;
    CHECK(right / nr > mean_left);

    s.roll = deg2rad(-5.0);
    const ContactMap flipped = contact_map(t, make_rig(t, s), limb);
    left = right = 0.0;
    nl = nr = 0;
    for (const auto& p : flipped.patches) {
        if (p.location.x < -0.005) { left += p.pressure; ++nl; }
        if (p.location.x > 0.005) { right += p.pressure; ++nr; }
    }
    CHECK(nl > 0);
    CHECK(left / nl > (nr > 0 ? right / nr : 0.0));
}

TEST_CASE("rigid contact pressure and over-pressure accounting") {
    const RigidToolParams t;
    const LimbModel limb = build_limb(0.10, 0.10, 0.30);
    RigidToolState s;
    s.axial = 0.15;
    s.z = 0.045;
    const ContactMap map = contact_map(t, make_rig(t, s), limb);
    CHECK(map.over_pressure == 0);
    double max_p = 0.0;
    for (const auto& p : map.patches) max_p = std::max(max_p, p.pressure);
    CHECK(max_p == Approx(0.24777887408895874).margin(0.01));

    s.z = 0.025;  // crown penetration 25 mm exceeds the 20 mm towel
    CHECK(contact_map(t, make_rig(t, s), limb).over_pressure > 0);

    s.z = 0.3;  // far away: nothing touches
    CHECK(contact_map(t, make_rig(t, s), limb).patches.empty());
}

TEST_CASE("rigid plate validation") {
    RigidToolParams t;
    t.mid_offset = 0.06;  // electrode would hang off the 0.10 m plate
    CHECK_THROWS_AS(t.validate(), ValidationError);
    t = {};
    t.grid_nx = 3;
    CHECK_THROWS_AS(t.validate(), ValidationError);
}
