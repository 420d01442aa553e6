#pragma once

// Trial engine: wipe passes over a creamed limb with either effector,
// closed-loop on capacitance at 10 Hz, emitting line-delimited telemetry
// and a coverage result per trial.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "control.hpp"
#include "effectors.hpp"
#include "errors.hpp"
#include "limb.hpp"
#include "sensor.hpp"

namespace capserv {

enum class EffectorKind { SkinGrip, RigidTool };

inline const char* effector_name(EffectorKind k) {
    return k == EffectorKind::SkinGrip ? "skin_grip" : "rigid_tool";
}

// ------------------------------------------------------------- trajectories

struct TrajectoryPass {
    int direction = +1;        // +1 feeds base -> tip, -1 tip -> base
    double grasp_angle = 0.0;  // rad, applied as an instantaneous re-grasp
};

// The gripper wraps most of the circumference so two passes suffice; the
// plate only reaches one band per pass and needs a third.
inline std::vector<TrajectoryPass> plan_trajectories(EffectorKind kind) {
    if (kind == EffectorKind::SkinGrip)
        return {TrajectoryPass{+1, 0.0}, TrajectoryPass{-1, deg2rad(60.0)}};
    return {TrajectoryPass{+1, 0.0}, TrajectoryPass{-1, deg2rad(60.0)},
            TrajectoryPass{+1, deg2rad(-60.0)}};
}

// ------------------------------------------------------------------ params

struct SimParams {
    double dt = 0.1;            // s, 10 Hz control loop
    double feed_speed = 0.04;   // m/s along the limb axis
    int warmup_ticks = 5;       // samples collected before the loop engages
    double wipe_tau = 0.12;     // pressure-seconds to clean a cell
    double pressure_floor = 0.05;
    double comfort_pressure = 0.25;  // rehearsed contact pressure target
    double approach_step = 0.003;    // m per tick during Approach
    double eta = 0.01;               // closure error norm tolerance
    int stall_ticks = 600;
    bool noise = true;
    double bed_clearance = 0.05;       // bed plane sits this far below the limb
    double approach_clearance = 0.15;  // start height above the base radius
    double rehearsal_clearance = 0.5;  // far-segment height for calibration
    double max_roll = 0.2;             // rad, actuator clamp both effectors
    double max_yaw = 0.2;              // rad, rigid tool
    double max_lateral = 0.05;         // m, rigid tool
    int grid_axial = 128;
    int grid_circ = 96;
    int max_pass_ticks = 5000;  // defensive bound, never hit in normal runs

    void validate() const {
        if (!(dt > 0.0) || !(feed_speed > 0.0)) throw ValidationError("dt and feed_speed must be positive");
        if (warmup_ticks < kWindowLength) throw ValidationError("warmup must fill the sample window");
        if (!(wipe_tau > 0.0)) throw ValidationError("wipe_tau must be positive");
        if (!(pressure_floor >= 0.0)) throw ValidationError("pressure_floor must be non-negative");
        if (!(comfort_pressure > 0.0) || comfort_pressure >= 1.0)
            throw ValidationError("comfort_pressure must lie in (0, 1)");
        if (!(approach_step > 0.0)) throw ValidationError("approach_step must be positive");
        if (!(eta > 0.0) || stall_ticks < 1) throw ValidationError("bad closure settings");
        if (grid_axial < 1 || grid_circ < 1) throw ValidationError("bad grid resolution");
    }
};

// -------------------------------------------------------------------- wipe

// Exposure integral: contact patches rub cream off while the effector is
// feeding. Static contact accumulates nothing. A cell is clean once its
// exposure crosses tau; cells keep their exposure between passes.
inline void wipe_update(SurfaceGrid& grid, const LimbModel& limb, const ContactMap& map,
                        bool feeding, double dt, double tau, double pressure_floor) {
    if (!feeding) return;
    const int na = grid.n_axial;
    const int nc = grid.n_circ;
    const double cell_w = 2.0 * kPi / nc;
    for (const ContactPatch& p : map.patches) {
        if (!p.in_contact || p.pressure < pressure_floor) continue;
        const double u_lo = p.y_lo / limb.length;
        const double u_hi = p.y_hi / limb.length;
        int i0 = static_cast<int>(std::floor(u_lo * na));
        int i1 = static_cast<int>(std::floor(u_hi * na - 1e-12));
        if (i1 < 0 || i0 >= na) continue;  // footprint past the segment ends
        i0 = std::max(i0, 0);
        i1 = std::min(i1, na - 1);
        const long k0 = static_cast<long>(std::floor((p.phi - p.phi_half + kPi) / cell_w));
        const long k1 = static_cast<long>(std::floor((p.phi + p.phi_half + kPi) / cell_w - 1e-12));
        for (int i = i0; i <= i1; ++i) {
            for (long k = k0; k <= k1; ++k) {
                const int j = static_cast<int>(((k % nc) + nc) % nc);
                SurfaceCell& cell = grid.at(i, j);
                cell.wipe_exposure += p.pressure * dt;
                if (cell.wipe_exposure >= tau) cell.cream_mass = 0.0;
            }
        }
    }
}

// --------------------------------------------------------------- rehearsal

// Automatic calibration run before the trial. Far and comfort segments are
// read through the real sensing pipeline at the pass-1 grasp station; the
// tight segment synthesizes full contact at the compliance plateau, which a
// frustum cannot provide to every electrode at once.
template <class Engine>
RehearsalTrace rehearse_skin_grip(const SkinGripParams& g, const LimbModel& limb,
                                  const CapacitanceModel& cap, const SimParams& sim,
                                  Engine* rng) {
    RehearsalTrace trace;
    trace.soft = true;
    const double r_base = limb.base_radius();
    const double shell_r = r_base + g.finger.shell_offset();

    SkinGripState st;
    st.axial = 0.0;
    st.z = r_base + sim.rehearsal_clearance;
    auto read_frame = [&](std::vector<std::vector<double>>& dst) {
        const SkinGripRig rig = make_rig(g, st, limb);
        const auto patches = skin_grip_patches(g, rig, limb);
        std::vector<double> frame(8);
        for (size_t e = 0; e < 8; ++e) frame[e] = raw_capacitance(cap, patches[e], rng);
        dst.push_back(frame);
    };

    for (int t = 0; t < 2 * kWindowLength; ++t) read_frame(trace.far);

    for (int t = 0; t < 2 * kWindowLength; ++t) {
        std::vector<double> frame(8);
        ElectrodePatch full;
        for (auto& s : full.samples) s.distance = -1.0;
        full.local_pressure = cap.plateau_pressure;
        for (size_t e = 0; e < 8; ++e) frame[e] = raw_capacitance(cap, full, rng);
        trace.tight.push_back(frame);
    }

    const double pen = sim.comfort_pressure * g.finger.foam_depth;
    const double kappa_c =
        std::max(g.finger.rest_curvature, 1.0 / shell_r + pen / g.finger.curl_gain);
    const double tendon = (kappa_c - g.finger.rest_curvature) / g.finger.curvature_gain;
    st.theta = {tendon / g.finger.spool_radius, tendon / g.finger.spool_radius};
    const double reach = shell_r - pen;
    st.z = std::sqrt(std::max(reach * reach - g.base_half_separation * g.base_half_separation,
                              1e-8));
    for (int t = 0; t < 3 * kWindowLength; ++t) read_frame(trace.comfort);
    return trace;
}

template <class Engine>
RehearsalTrace rehearse_rigid(const RigidToolParams& tool, const LimbModel& limb,
                              const CapacitanceModel& cap, const SimParams& sim, Engine* rng) {
    RehearsalTrace trace;
    trace.soft = false;

    RigidToolState st;
    st.axial = 0.5 * limb.length;
    st.z = limb.radius_at(0.5) + sim.rehearsal_clearance;
    auto read_frame = [&](std::vector<std::vector<double>>& dst) {
        const RigidRig rig = make_rig(tool, st);
        const auto patches = rigid_tool_patches(tool, rig, limb);
        std::vector<double> frame(6);
        for (size_t e = 0; e < 6; ++e) frame[e] = raw_capacitance(cap, patches[e], rng);
        dst.push_back(frame);
    };

    for (int t = 0; t < 2 * kWindowLength; ++t) read_frame(trace.far);

    for (int t = 0; t < 2 * kWindowLength; ++t) {
        std::vector<double> frame(6);
        ElectrodePatch full;
        for (auto& s : full.samples) s.distance = -1.0;
        full.local_pressure = cap.plateau_pressure;
        for (size_t e = 0; e < 6; ++e) frame[e] = raw_capacitance(cap, full, rng);
        trace.tight.push_back(frame);
    }

    st.z = limb.radius_at(0.5) - sim.comfort_pressure * tool.foam_depth;
    for (int t = 0; t < 3 * kWindowLength; ++t) read_frame(trace.comfort);
    return trace;
}

// ------------------------------------------------------------------ result

enum class TrialStatus { Completed, ClosureStall, ApproachOverrun };

inline const char* status_name(TrialStatus s) {
    switch (s) {
        case TrialStatus::Completed: return "completed";
        case TrialStatus::ClosureStall: return "closure_stall";
        default: return "approach_overrun";
    }
}

struct PassStats {
    int approach_ticks = 0;
    int closure_ticks = 0;
    double closure_error_norm = 0.0;  // at Closure exit (or stall)
    double wrap_at_closure = 0.0;     // soft only
    double feed_distance = 0.0;       // m
};

struct SimResult {
    TrialStatus status = TrialStatus::Completed;
    std::string message;
    int ticks = 0;
    double sim_seconds = 0.0;
    bool coverage_defined = false;
    CoverageReport coverage;
    int over_pressure_events = 0;
    bool over_travel = false;
    std::vector<PassStats> passes;
    int cleaning_ticks = 0;
    int cleaning_ticks_tracked = 0;  // every back-electrode |e| < 0.1
    double initial_cream_mass = 0.0;
    double final_cream_mass = 0.0;
    SurfaceGrid before;
    SurfaceGrid after;

    bool failed() const { return status != TrialStatus::Completed; }
    double min_wrap_at_closure() const {
        double w = 1.0;
        for (const auto& p : passes) w = std::min(w, p.wrap_at_closure);
        return passes.empty() ? 0.0 : w;
    }
};

// ------------------------------------------------------------------- setup

struct TrialSetup {
    EffectorKind kind = EffectorKind::SkinGrip;
    LimbModel limb;
    std::vector<CreamRing> rings{{0.3, 0.04}, {0.5, 0.04}, {0.7, 0.04}};
    CapacitanceModel cap;
    SkinGripParams grip;
    RigidToolParams tool;
    SkinGripGains soft_gains;
    RigidGains rigid_gains;
    SimParams sim;
    std::uint64_t seed = 1;
};

namespace detail {

inline nlohmann::json pose_json(const SkinGripState& s) {
    return {{"x", 0.0},      {"z", s.z},           {"roll", s.roll},
            {"yaw", 0.0},    {"axial", s.axial},   {"grasp", s.grasp_angle}};
}

inline nlohmann::json pose_json(const RigidToolState& s) {
    return {{"x", s.x},      {"z", s.z},           {"roll", s.roll},
            {"yaw", s.yaw},  {"axial", s.axial},   {"grasp", s.grasp_angle}};
}

template <size_t N>
nlohmann::json to_json_array(const std::array<double, N>& a) {
    nlohmann::json j = nlohmann::json::array();
    for (double v : a) j.push_back(v);
    return j;
}

struct ContactStats {
    int contacts = 0;
    double max_pressure = 0.0;
};

inline ContactStats contact_stats(const ContactMap& map) {
    ContactStats cs;
    for (const auto& p : map.patches) {
        if (!p.in_contact) continue;
        ++cs.contacts;
        cs.max_pressure = std::max(cs.max_pressure, p.pressure);
    }
    return cs;
}

}  // namespace detail

// --------------------------------------------------------------- run_trial

inline SimResult run_trial(const TrialSetup& setup, std::ostream* telemetry = nullptr) {
    setup.sim.validate();
    setup.cap.validate();
    if (setup.kind == EffectorKind::SkinGrip) setup.grip.validate();
    else setup.tool.validate();

    SimResult res;
    std::mt19937_64 rng(setup.seed);
    auto* noise = setup.sim.noise ? &rng : static_cast<std::mt19937_64*>(nullptr);

    SurfaceGrid grid = make_surface_grid(setup.limb, setup.sim.grid_axial, setup.sim.grid_circ);
    if (!setup.rings.empty()) apply_cream_rings(grid, setup.limb, setup.rings);
    res.before = grid;
    res.initial_cream_mass = 0.0;
    for (const auto& c : grid.cells) res.initial_cream_mass += c.cream_mass;

    const double r_base = setup.limb.base_radius();
    const double z_bed = -(r_base + setup.sim.bed_clearance);
    const double z_start = r_base + setup.sim.approach_clearance;
    const auto passes = plan_trajectories(setup.kind);

    const bool soft = setup.kind == EffectorKind::SkinGrip;
    RehearsalTrace trace =
        soft ? rehearse_skin_grip(setup.grip, setup.limb, setup.cap, setup.sim, noise)
             : rehearse_rigid(setup.tool, setup.limb, setup.cap, setup.sim, noise);
    const CalibrationProfile profile = calibrate(trace);

    const size_t n_e = soft ? 8 : 6;
    std::vector<SampleWindow> windows(n_e);

    int tick = 0;
    bool warmup_done = false;
    auto emit = [&](int pass_idx, const char* phase, const nlohmann::json& pose,
                    const std::vector<double>& raw, const std::vector<double>& norm,
                    const nlohmann::json& errors, const nlohmann::json& theta,
                    const detail::ContactStats& cs, int feed_dir) {
        if (!telemetry) return;
        nlohmann::json j;
        j["tick"] = tick;
        j["t"] = tick * setup.sim.dt;
        j["pass"] = pass_idx;
        j["phase"] = phase;
        j["pose"] = pose;
        j["raw"] = raw;
        if (norm.empty()) j["norm"] = nullptr;
        else j["norm"] = norm;
        j["errors"] = errors;
        j["theta"] = theta;
        j["contacts"] = cs.contacts;
        j["max_pressure"] = cs.max_pressure;
        j["over_pressure"] = res.over_pressure_events;
        j["feed"] = feed_dir;
        (*telemetry) << j.dump() << '\n';
    };

    if (soft) {
        SkinGripController ctl(setup.soft_gains, profile,
                               setup.grip.finger.tendon_max / setup.grip.finger.spool_radius,
                               setup.sim.approach_step, setup.sim.eta, setup.sim.stall_ticks);
        SkinGripState st;
        st.grasp_angle = 0.0;

        for (size_t pi = 0; pi < passes.size() && !res.failed(); ++pi) {
            const TrajectoryPass& pass = passes[pi];
            PassStats ps;
            st.grasp_angle = pass.grasp_angle;
            st.axial = pass.direction > 0 ? 0.0 : setup.limb.length;
            st.z = z_start;
            st.roll = 0.0;
            st.theta = {0.0, 0.0};
            ctl.begin_pass(st.theta);
            SoftPhase prev_phase = SoftPhase::Approach;
            int feed_dir = 0;

            for (int pass_tick = 0; pass_tick < setup.sim.max_pass_ticks; ++pass_tick) {
                const SkinGripRig rig = make_rig(setup.grip, st, setup.limb);
                res.over_travel = res.over_travel || rig.tendon_clamped;
                const auto patches = skin_grip_patches(setup.grip, rig, setup.limb);
                std::vector<double> raw(8);
                for (size_t e = 0; e < 8; ++e) {
                    raw[e] = raw_capacitance(setup.cap, patches[e], noise);
                    windows[e].push(raw[e]);
                }
                const ContactMap cmap = contact_map(setup.grip, rig, setup.limb);
                res.over_pressure_events += cmap.over_pressure;
                const auto cs = detail::contact_stats(cmap);
                wipe_update(grid, setup.limb, cmap, feed_dir != 0, setup.sim.dt,
                            setup.sim.wipe_tau, setup.sim.pressure_floor);

                if (!warmup_done && tick + 1 < setup.sim.warmup_ticks) {
                    emit(static_cast<int>(pi), "warmup", detail::pose_json(st), raw, {},
                         nullptr, detail::to_json_array(st.theta), cs, 0);
                    ++tick;
                    continue;
                }
                warmup_done = true;

                Readings8 norm{};
                std::vector<double> norm_v(8);
                for (size_t e = 0; e < 8; ++e) {
                    norm[e] = normalize(windows[e], profile, e);
                    norm_v[e] = norm[e];
                }
                const SoftCommand cmd = ctl.step(norm);
                const char* phase_name = ctl.phase() == SoftPhase::Approach  ? "approach"
                                         : ctl.phase() == SoftPhase::Closure ? "closure"
                                                                             : "cleaning";
                if (prev_phase == SoftPhase::Approach && ctl.phase() != SoftPhase::Approach)
                    ps.approach_ticks = pass_tick;
                if (prev_phase != SoftPhase::Cleaning && ctl.phase() == SoftPhase::Cleaning) {
                    ps.closure_ticks = pass_tick - ps.approach_ticks;
                    ps.closure_error_norm = ctl.last_error_norm();
                    ps.wrap_at_closure = wrap_fraction(setup.grip, rig, setup.limb);
                }
                prev_phase = ctl.phase();

                st.z += cmd.dz;
                st.roll = clamp(st.roll + cmd.dgamma, -setup.sim.max_roll, setup.sim.max_roll);
                st.theta = cmd.theta;
                res.over_travel = res.over_travel || ctl.over_travel();
                feed_dir = cmd.feed ? pass.direction : 0;
                if (cmd.feed) {
                    const double step = setup.sim.feed_speed * setup.sim.dt;
                    st.axial += pass.direction * step;
                    ps.feed_distance += step;
                    ++res.cleaning_ticks;
                    double worst = 0.0;
                    for (double e : ctl.last_errors()) worst = std::max(worst, std::abs(e));
                    if (worst < 0.1) ++res.cleaning_ticks_tracked;
                }

                emit(static_cast<int>(pi), phase_name, detail::pose_json(st), raw, norm_v,
                     nlohmann::json(ctl.last_errors()), detail::to_json_array(st.theta), cs,
                     feed_dir);
                ++tick;

                if (cmd.stalled) {
                    res.status = TrialStatus::ClosureStall;
                    res.message = "closure stalled on pass " + std::to_string(pi) +
                                  ", error norm " + std::to_string(ctl.last_error_norm());
                    ps.closure_error_norm = ctl.last_error_norm();
                    break;
                }
                if (ctl.phase() == SoftPhase::Approach && st.z <= z_bed) {
                    res.status = TrialStatus::ApproachOverrun;
                    res.message = "approach reached the bed plane on pass " + std::to_string(pi);
                    break;
                }
                if (cmd.feed &&
                    (pass.direction > 0 ? st.axial >= setup.limb.length : st.axial <= 0.0))
                    break;
            }
            res.passes.push_back(ps);
        }
    } else {
        RigidController ctl(setup.rigid_gains, profile, setup.sim.approach_step);
        RigidToolState st;

        for (size_t pi = 0; pi < passes.size() && !res.failed(); ++pi) {
            const TrajectoryPass& pass = passes[pi];
            PassStats ps;
            st.grasp_angle = pass.grasp_angle;
            st.axial = pass.direction > 0 ? 0.0 : setup.limb.length;
            st.x = 0.0;
            st.z = z_start;
            st.yaw = 0.0;
            st.roll = 0.0;
            ctl.begin_pass();
            RigidPhase prev_phase = RigidPhase::Approach;
            int feed_dir = 0;

            for (int pass_tick = 0; pass_tick < setup.sim.max_pass_ticks; ++pass_tick) {
                const RigidRig rig = make_rig(setup.tool, st);
                const auto patches = rigid_tool_patches(setup.tool, rig, setup.limb);
                std::vector<double> raw(6);
                for (size_t e = 0; e < 6; ++e) {
                    raw[e] = raw_capacitance(setup.cap, patches[e], noise);
                    windows[e].push(raw[e]);
                }
                const ContactMap cmap = contact_map(setup.tool, rig, setup.limb);
                res.over_pressure_events += cmap.over_pressure;
                const auto cs = detail::contact_stats(cmap);
                wipe_update(grid, setup.limb, cmap, feed_dir != 0, setup.sim.dt,
                            setup.sim.wipe_tau, setup.sim.pressure_floor);

                if (!warmup_done && tick + 1 < setup.sim.warmup_ticks) {
                    emit(static_cast<int>(pi), "warmup", detail::pose_json(st), raw, {},
                         nullptr, nlohmann::json::array(), cs, 0);
                    ++tick;
                    continue;
                }
                warmup_done = true;

                Readings6 norm{};
                std::vector<double> norm_v(6);
                for (size_t e = 0; e < 6; ++e) {
                    norm[e] = normalize(windows[e], profile, e);
                    norm_v[e] = norm[e];
                }
                const RigidCommand cmd = ctl.step(norm);
                const char* phase_name =
                    ctl.phase() == RigidPhase::Approach ? "approach" : "cleaning";
                if (prev_phase == RigidPhase::Approach && ctl.phase() == RigidPhase::Cleaning)
                    ps.approach_ticks = pass_tick;
                prev_phase = ctl.phase();

                st.x = clamp(st.x + cmd.dx, -setup.sim.max_lateral, setup.sim.max_lateral);
                st.z += cmd.dz;
                st.yaw = clamp(st.yaw + cmd.dalpha, -setup.sim.max_yaw, setup.sim.max_yaw);
                st.roll = clamp(st.roll + cmd.dgamma, -setup.sim.max_roll, setup.sim.max_roll);
                feed_dir = cmd.feed ? pass.direction : 0;
                if (cmd.feed) {
                    const double step = setup.sim.feed_speed * setup.sim.dt;
                    st.axial += pass.direction * step;
                    ps.feed_distance += step;
                }

                const auto& re = ctl.last_errors();
                emit(static_cast<int>(pi), phase_name, detail::pose_json(st), raw, norm_v,
                     nlohmann::json{{"x_r", re.x_r},
                                    {"z_r", re.z_r},
                                    {"alpha_r", re.alpha_r},
                                    {"gamma_r", re.gamma_r}},
                     nlohmann::json::array(), cs, feed_dir);
                ++tick;

                if (ctl.phase() == RigidPhase::Approach && st.z <= z_bed) {
                    res.status = TrialStatus::ApproachOverrun;
                    res.message = "approach reached the bed plane on pass " + std::to_string(pi);
                    break;
                }
                if (cmd.feed &&
                    (pass.direction > 0 ? st.axial >= setup.limb.length : st.axial <= 0.0))
                    break;
            }
            res.passes.push_back(ps);
        }
    }

    res.ticks = tick;
    res.sim_seconds = tick * setup.sim.dt;
    res.after = grid;
    res.final_cream_mass = 0.0;
    for (const auto& c : grid.cells) res.final_cream_mass += c.cream_mass;
    if (!res.failed() && res.before.creamed_area() > 0.0) {
        res.coverage = coverage_report(res.before, res.after);
        res.coverage_defined = true;
    }
    return res;
}

}  // namespace capserv
