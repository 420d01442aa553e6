#pragma once

// Limb geometry and the wipeable surface grid.
//
// A limb is a linear frustum (tapered cylinder) with its axis along +y of its
// local frame, base plane at y = 0, tip plane at y = length. The grid
// discretizes the lateral surface into axial rows and circumferential
// columns; cream lives on grid cells and is removed by wiping.

#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"

namespace capserv {

// Diameter envelope the gripper hardware is sized for.
inline constexpr double kMinLimbDiameter = 0.06;
inline constexpr double kMaxLimbDiameter = 0.20;

struct LimbModel {
    double base_diameter = 0.10;  // m, at u = 0
    double tip_diameter = 0.10;   // m, at u = 1
    double length = 0.30;         // m
    RigidTransform axis_pose;     // limb frame -> world

    double base_radius() const { return 0.5 * base_diameter; }
    double tip_radius() const { return 0.5 * tip_diameter; }

    // Surface radius at normalized axial position u in [0, 1].
    double radius_at(double u) const {
        return base_radius() + (tip_radius() - base_radius()) * u;
    }

    double radius_at_y(double y) const { return radius_at(y / length); }

    // d(radius)/dy, constant along the frustum.
    double taper_slope() const { return (tip_radius() - base_radius()) / length; }

    // Exact lateral (side) surface area of the frustum.
    double lateral_area() const {
        const double dr = tip_radius() - base_radius();
        const double slant = std::sqrt(length * length + dr * dr);
        return kPi * (base_radius() + tip_radius()) * slant;
    }

    // Lowest world z reached by the surface, used for the bed plane.
    double bottom_z() const {
        return axis_pose.t.z - std::max(base_radius(), tip_radius());
    }

    Vec3 to_limb_frame(const Vec3& world) const { return axis_pose.apply_inverse(world); }

    // Surface point of (u, phi) in the limb frame. phi = 0 is the top (+z),
    // increasing toward +x, in [-pi, pi).
    Vec3 surface_point(double u, double phi) const {
        const double r = radius_at(u);
        return {r * std::sin(phi), u * length, r * std::cos(phi)};
    }
};

inline LimbModel build_limb(double base_diameter, double tip_diameter, double length,
                            const RigidTransform& axis_pose = {}) {
    auto check_diameter = [](double d, const char* field) {
        if (!(d >= kMinLimbDiameter && d <= kMaxLimbDiameter))
            throw ValidationError(std::string(field) + " outside [0.06, 0.20] m: " +
                                  std::to_string(d));
    };
    check_diameter(base_diameter, "base_diameter");
    check_diameter(tip_diameter, "tip_diameter");
    if (!(tip_diameter <= base_diameter))
        throw ValidationError("tip_diameter exceeds base_diameter");
    if (!(length > 0.0))
        throw ValidationError("length must be positive: " + std::to_string(length));
    LimbModel m;
    m.base_diameter = base_diameter;
    m.tip_diameter = tip_diameter;
    m.length = length;
    m.axis_pose = axis_pose;
    return m;
}

// Signed distance from a world point to the limb surface: positive outside,
// negative inside. Exact for the lateral surface while the point's axial
// station lies on the limb; past the end planes the axial gap is folded in so
// the sign stays correct and values grow away from the body.
inline double signed_distance(const LimbModel& limb, const Vec3& world_point) {
    const Vec3 p = limb.to_limb_frame(world_point);
    const double rho = std::hypot(p.x, p.z);
    const double y_cl = clamp(p.y, 0.0, limb.length);
    const double m = limb.taper_slope();
    const double lateral = (rho - limb.radius_at_y(y_cl)) / std::sqrt(1.0 + m * m);
    const double ax_gap = std::max({-p.y, p.y - limb.length, 0.0});
    if (ax_gap <= 0.0) return lateral;
    if (lateral <= 0.0) return ax_gap;
    return std::hypot(lateral, ax_gap);
}

struct SurfaceCell {
    double area = 0.0;        // m^2, exact integral over the cell
    double cream_mass = 0.0;  // arbitrary mass units
    double wipe_exposure = 0.0;
};

// Angular extents of the three assessment views. Top is centered on phi = 0,
// the two side bands flank it, bottom is whatever remains.
struct ViewPartition {
    double top_half_angle = deg2rad(60.0);
    double side_angle = deg2rad(60.0);

    void validate() const {
        if (!(top_half_angle > 0.0) || !(side_angle > 0.0) ||
            top_half_angle + side_angle > kPi)
            throw ValidationError("view partition angles must be positive and fit the circle");
    }

    // 0 = top, 1 = side, 2 = bottom.
    int view_of(double phi) const {
        const double a = std::abs(wrap_angle(phi));
        if (a < top_half_angle) return 0;
        if (a < top_half_angle + side_angle) return 1;
        return 2;
    }
};

struct SurfaceGrid {
    int n_axial = 128;
    int n_circ = 96;
    std::vector<SurfaceCell> cells;  // row-major: [axial][circ]

    SurfaceCell& at(int i, int j) { return cells[static_cast<size_t>(i) * n_circ + j]; }
    const SurfaceCell& at(int i, int j) const {
        return cells[static_cast<size_t>(i) * n_circ + j];
    }

    double u_center(int i) const { return (i + 0.5) / n_axial; }
    double phi_center(int j) const { return -kPi + (j + 0.5) * 2.0 * kPi / n_circ; }

    int axial_index(double u) const {
        return clamp(static_cast<int>(std::floor(u * n_axial)), 0, n_axial - 1);
    }
    int circ_index(double phi) const {
        const double f = (wrap_angle(phi) + kPi) / (2.0 * kPi);
        return clamp(static_cast<int>(std::floor(f * n_circ)), 0, n_circ - 1);
    }

    double creamed_area() const {
        double a = 0.0;
        for (const auto& c : cells)
            if (c.cream_mass > 0.0) a += c.area;
        return a;
    }
};

// Cell areas come from the exact integral of the area element
// r(u) * sqrt(L^2 + dr^2) du dphi, so their sum matches lateral_area() to
// rounding error at any resolution.
inline SurfaceGrid make_surface_grid(const LimbModel& limb, int n_axial = 128, int n_circ = 96) {
    if (n_axial < 1 || n_circ < 1)
        throw ValidationError("grid resolution must be at least 1x1");
    SurfaceGrid g;
    g.n_axial = n_axial;
    g.n_circ = n_circ;
    g.cells.assign(static_cast<size_t>(n_axial) * n_circ, SurfaceCell{});
    const double rb = limb.base_radius();
    const double dr = limb.tip_radius() - rb;
    const double slant_per_u = std::sqrt(limb.length * limb.length + dr * dr);
    const double dphi = 2.0 * kPi / n_circ;
    for (int i = 0; i < n_axial; ++i) {
        const double u0 = static_cast<double>(i) / n_axial;
        const double u1 = static_cast<double>(i + 1) / n_axial;
        const double radius_integral = rb * (u1 - u0) + 0.5 * dr * (u1 * u1 - u0 * u0);
        const double area = radius_integral * slant_per_u * dphi;
        for (int j = 0; j < n_circ; ++j) g.at(i, j).area = area;
    }
    return g;
}

// Axial band of cream, positioned by its center as a fraction of limb length.
struct CreamRing {
    double axial_center = 0.5;  // fraction of length
    double axial_width = 0.04;  // m
};

inline void validate_rings(const LimbModel& limb, const std::vector<CreamRing>& rings) {
    for (size_t k = 0; k < rings.size(); ++k) {
        const double c = rings[k].axial_center * limb.length;
        const double h = 0.5 * rings[k].axial_width;
        if (!(rings[k].axial_width > 0.0))
            throw ValidationError("ring axial_width must be positive");
        if (c - h < 0.0 || c + h > limb.length)
            throw ValidationError("ring " + std::to_string(k) + " extends past the limb");
        for (size_t l = 0; l < k; ++l) {
            const double c2 = rings[l].axial_center * limb.length;
            const double h2 = 0.5 * rings[l].axial_width;
            if (std::max(c - h, c2 - h2) < std::min(c + h, c2 + h2))
                throw ValidationError("rings " + std::to_string(l) + " and " +
                                      std::to_string(k) + " overlap");
        }
    }
}

// Deposit cream: every cell whose axial span intersects a ring is loaded over
// the full circumference with mass_per_area * area.
inline void apply_cream_rings(SurfaceGrid& grid, const LimbModel& limb,
                              const std::vector<CreamRing>& rings, double mass_per_area = 1.0) {
    validate_rings(limb, rings);
    if (!(mass_per_area > 0.0)) throw ValidationError("mass_per_area must be positive");
    for (int i = 0; i < grid.n_axial; ++i) {
        const double y0 = limb.length * i / grid.n_axial;
        const double y1 = limb.length * (i + 1) / grid.n_axial;
        bool creamed = false;
        for (const auto& r : rings) {
            const double c = r.axial_center * limb.length;
            if (y1 > c - 0.5 * r.axial_width && y0 < c + 0.5 * r.axial_width) {
                creamed = true;
                break;
            }
        }
        if (!creamed) continue;
        for (int j = 0; j < grid.n_circ; ++j) {
            auto& cell = grid.at(i, j);
            cell.cream_mass = mass_per_area * cell.area;
        }
    }
}

// Fraction of initial cream mass below which a cell counts as cleaned.
inline constexpr double kCleanedFraction = 0.01;

struct CoverageReport {
    // Index 0 top, 1 side (both bands), 2 bottom; percentages in [0, 100].
    std::array<double, 3> view_pct = {0.0, 0.0, 0.0};
    std::array<double, 3> view_creamed_area = {0.0, 0.0, 0.0};
    double total_pct = 0.0;
    double creamed_area = 0.0;  // A_b
    double residual_area = 0.0; // A_a
};

// Compare cream masses cell-by-cell between the pre-trial and post-trial
// grids. Throws UndefinedCoverageError when nothing was creamed.
inline CoverageReport coverage_report(const SurfaceGrid& before, const SurfaceGrid& after,
                                      const ViewPartition& views = {}) {
    if (before.n_axial != after.n_axial || before.n_circ != after.n_circ ||
        before.cells.size() != after.cells.size())
        throw ValidationError("coverage_report requires grids of identical shape");
    views.validate();
    CoverageReport rep;
    std::array<double, 3> cleaned = {0.0, 0.0, 0.0};
    for (int i = 0; i < before.n_axial; ++i) {
        for (int j = 0; j < before.n_circ; ++j) {
            const auto& b = before.at(i, j);
            if (b.cream_mass <= 0.0) continue;
            const int v = views.view_of(before.phi_center(j));
            rep.view_creamed_area[v] += b.area;
            rep.creamed_area += b.area;
            if (after.at(i, j).cream_mass < kCleanedFraction * b.cream_mass)
                cleaned[v] += b.area;
            else
                rep.residual_area += b.area;
        }
    }
    if (rep.creamed_area <= 0.0)
        throw UndefinedCoverageError("no creamed cells; coverage is undefined");
    for (int v = 0; v < 3; ++v)
        rep.view_pct[v] = rep.view_creamed_area[v] > 0.0
                              ? 100.0 * cleaned[v] / rep.view_creamed_area[v]
                              : 0.0;
    rep.total_pct = 100.0 * (rep.creamed_area - rep.residual_area) / rep.creamed_area;
    return rep;
}

}  // namespace capserv
