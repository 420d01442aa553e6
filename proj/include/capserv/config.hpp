#pragma once

// JSON configuration for the CLI and batch runner. Every key has a default;
// unknown keys are rejected at every nesting level so typos fail loudly.

#include <array>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "control.hpp"
#include "effectors.hpp"
#include "errors.hpp"
#include "limb.hpp"
#include "sensor.hpp"
#include "sim.hpp"

namespace capserv {

struct SweepParams {
    int participants = 12;
    int repeats = 2;
    std::array<double, 2> arm_diameter = {0.07, 0.11};
    std::array<double, 2> leg_diameter = {0.09, 0.16};
    std::array<double, 2> limb_length = {0.25, 0.45};
    std::array<double, 2> taper_ratio = {0.8, 0.95};

    void validate() const {
        if (participants < 1 || repeats < 1)
            throw ConfigError("sweep needs at least one participant and one repeat");
        auto ordered = [](const std::array<double, 2>& r) { return r[0] > 0.0 && r[0] <= r[1]; };
        if (!ordered(arm_diameter) || !ordered(leg_diameter) || !ordered(limb_length) ||
            !ordered(taper_ratio))
            throw ConfigError("sweep ranges must satisfy 0 < min <= max");
        if (taper_ratio[1] > 1.0) throw ConfigError("taper ratio cannot exceed 1");
    }
};

struct LimbSpec {
    double base_diameter = 0.10;
    double tip_diameter = 0.09;
    double length = 0.30;
};

struct Config {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string effector = "both";  // skin_grip | rigid_tool | both
    int workers = 1;
    long mc_samples = 200000;
    LimbSpec limb;
    std::vector<CreamRing> rings{{0.3, 0.04}, {0.5, 0.04}, {0.7, 0.04}};
    SimParams sim;
    CapacitanceModel cap;
    SkinGripParams grip;
    RigidToolParams tool;
    SkinGripGains soft_gains;
    RigidGains rigid_gains;
    SweepParams sweep;

    LimbModel build() const {
        return build_limb(limb.base_diameter, limb.tip_diameter, limb.length);
    }

    void validate() const {
        if (effector != "skin_grip" && effector != "rigid_tool" && effector != "both")
            throw ConfigError("effector must be skin_grip, rigid_tool, or both");
        if (workers < 1) throw ConfigError("workers must be at least 1");
        if (mc_samples < 100000) throw ConfigError("mc_samples must be at least 1e5");
        sim.validate();
        cap.validate();
        grip.validate();
        tool.validate();
        sweep.validate();
    }
};

namespace detail {

inline void expect_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                        const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) { ok = true; break; }
        if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

inline void read_range(const nlohmann::json& j, const char* key, std::array<double, 2>& dst) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) throw ConfigError(std::string(key) + " must be [min, max]");
    dst = {a[0].get<double>(), a[1].get<double>()};
}

}  // namespace detail

inline Config parse_config(const nlohmann::json& j) {
    using detail::expect_keys;
    using detail::read_if;
    using detail::read_range;

    Config cfg;
    expect_keys(j,
                {"schema_version", "seed", "out_dir", "effector", "workers", "mc_samples",
                 "limb", "cream_rings", "sim", "capacitance", "soft_gains", "rigid_gains",
                 "sweep"},
                "config");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1)
        throw ConfigError("unsupported schema_version, expected 1");
    read_if(j, "seed", cfg.seed);
    read_if(j, "out_dir", cfg.out_dir);
    read_if(j, "effector", cfg.effector);
    read_if(j, "workers", cfg.workers);
    read_if(j, "mc_samples", cfg.mc_samples);

    if (j.contains("limb")) {
        const auto& l = j.at("limb");
        expect_keys(l, {"base_diameter", "tip_diameter", "length"}, "limb");
        read_if(l, "base_diameter", cfg.limb.base_diameter);
        read_if(l, "tip_diameter", cfg.limb.tip_diameter);
        read_if(l, "length", cfg.limb.length);
    }
    if (j.contains("cream_rings")) {
        const auto& rings = j.at("cream_rings");
        if (!rings.is_array()) throw ConfigError("cream_rings must be an array");
        cfg.rings.clear();
        for (const auto& r : rings) {
            expect_keys(r, {"center", "width"}, "cream_rings entry");
            CreamRing ring;
            read_if(r, "center", ring.axial_center);
            read_if(r, "width", ring.axial_width);
            cfg.rings.push_back(ring);
        }
    }
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        expect_keys(s,
                    {"dt", "feed_speed", "warmup_ticks", "wipe_tau", "pressure_floor",
                     "comfort_pressure", "approach_step", "eta", "stall_ticks", "noise",
                     "bed_clearance", "approach_clearance", "max_roll", "max_yaw",
                     "max_lateral", "grid_axial", "grid_circ"},
                    "sim");
        read_if(s, "dt", cfg.sim.dt);
        read_if(s, "feed_speed", cfg.sim.feed_speed);
        read_if(s, "warmup_ticks", cfg.sim.warmup_ticks);
        read_if(s, "wipe_tau", cfg.sim.wipe_tau);
        read_if(s, "pressure_floor", cfg.sim.pressure_floor);
        read_if(s, "comfort_pressure", cfg.sim.comfort_pressure);
        read_if(s, "approach_step", cfg.sim.approach_step);
        read_if(s, "eta", cfg.sim.eta);
        read_if(s, "stall_ticks", cfg.sim.stall_ticks);
        read_if(s, "noise", cfg.sim.noise);
        read_if(s, "bed_clearance", cfg.sim.bed_clearance);
        read_if(s, "approach_clearance", cfg.sim.approach_clearance);
        read_if(s, "max_roll", cfg.sim.max_roll);
        read_if(s, "max_yaw", cfg.sim.max_yaw);
        read_if(s, "max_lateral", cfg.sim.max_lateral);
        read_if(s, "grid_axial", cfg.sim.grid_axial);
        read_if(s, "grid_circ", cfg.sim.grid_circ);
    }
    if (j.contains("capacitance")) {
        const auto& c = j.at("capacitance");
        expect_keys(c,
                    {"c_far", "c_gain", "decay_length", "compression_gain", "plateau_pressure",
                     "noise_sigma"},
                    "capacitance");
        read_if(c, "c_far", cfg.cap.c_far);
        read_if(c, "c_gain", cfg.cap.c_gain);
        read_if(c, "decay_length", cfg.cap.decay_length);
        read_if(c, "compression_gain", cfg.cap.compression_gain);
        read_if(c, "plateau_pressure", cfg.cap.plateau_pressure);
        read_if(c, "noise_sigma", cfg.cap.noise_sigma);
    }
    if (j.contains("soft_gains")) {
        const auto& g = j.at("soft_gains");
        expect_keys(g, {"k_theta", "k_z", "k_gamma", "legacy_z_form"}, "soft_gains");
        if (g.contains("k_theta")) {
            const auto& m = g.at("k_theta");
            if (!m.is_array() || m.size() != 2 || !m[0].is_array() || m[0].size() != 6 ||
                !m[1].is_array() || m[1].size() != 6)
                throw ConfigError("k_theta must be a 2x6 array");
            for (size_t r = 0; r < 2; ++r)
                for (size_t i = 0; i < 6; ++i)
                    cfg.soft_gains.k_theta[r][i] = m[r][i].get<double>();
        }
        read_if(g, "k_z", cfg.soft_gains.k_z);
        read_if(g, "k_gamma", cfg.soft_gains.k_gamma);
        read_if(g, "legacy_z_form", cfg.soft_gains.legacy_z_form);
    }
    if (j.contains("rigid_gains")) {
        const auto& g = j.at("rigid_gains");
        expect_keys(g, {"k_x", "k_z", "k_alpha", "k_gamma"}, "rigid_gains");
        read_if(g, "k_x", cfg.rigid_gains.k_x);
        read_if(g, "k_z", cfg.rigid_gains.k_z);
        read_if(g, "k_alpha", cfg.rigid_gains.k_alpha);
        read_if(g, "k_gamma", cfg.rigid_gains.k_gamma);
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        expect_keys(s,
                    {"participants", "repeats", "arm_diameter", "leg_diameter", "limb_length",
                     "taper_ratio"},
                    "sweep");
        read_if(s, "participants", cfg.sweep.participants);
        read_if(s, "repeats", cfg.sweep.repeats);
        read_range(s, "arm_diameter", cfg.sweep.arm_diameter);
        read_range(s, "leg_diameter", cfg.sweep.leg_diameter);
        read_range(s, "limb_length", cfg.sweep.limb_length);
        read_range(s, "taper_ratio", cfg.sweep.taper_ratio);
    }

    cfg.validate();
    return cfg;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(j);
}

// Trial assembly shared by the CLI verbs and the batch runner.
inline TrialSetup make_setup(const Config& cfg, EffectorKind kind, const LimbModel& limb,
                             std::uint64_t seed) {
    TrialSetup ts;
    ts.kind = kind;
    ts.limb = limb;
    ts.rings = cfg.rings;
    ts.cap = cfg.cap;
    ts.grip = cfg.grip;
    ts.tool = cfg.tool;
    ts.soft_gains = cfg.soft_gains;
    ts.rigid_gains = cfg.rigid_gains;
    ts.sim = cfg.sim;
    ts.seed = seed;
    return ts;
}

}  // namespace capserv
