// Release gate for the cleaning simulator. Eight independent checks run
// against the default configuration and print one PASS/FAIL line each;
// the exit code is the number of failed checks.
//
//   1 coverage dominance   gripper beats the plate on every sweep limb
//   2 diameter trend       plate coverage degrades with arm diameter
//   3 closure convergence  grasp settles under the error gate on all sizes
//   4 sensing ramp         tendon sweep gives a monotone, saturating signal
//   5 controller algebra   fixed-point / scaling / common-mode invariants
//   6 coverage oracle      grid accounting matches Monte Carlo sampling
//   7 determinism          identical runs produce identical bytes
//   8 taper tracking       per-electrode servo error stays inside the band

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "capserv/batch.hpp"
#include "capserv/oracle.hpp"

using namespace capserv;
namespace fs = std::filesystem;

namespace {

struct Gate {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 2) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return sa.str() == sb.str();
}

int pool_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::max(1u, std::min(8u, hw)));
}

// ------------------------------------------------- 1, 2: the default sweep

Gate check_dominance(const BatchResult& batch, double sweep_seconds) {
    Gate g{"coverage dominance", false, ""};
    int incomplete = 0;
    double min_soft = 1e9, max_rigid_bottom = -1e9;
    // soft and rigid totals per drawn limb instance
    std::map<std::string, std::array<double, 2>> pairs;
    for (const BatchRow& r : batch.rows) {
        if (r.status != TrialStatus::Completed || !r.coverage_defined) {
            ++incomplete;
            continue;
        }
        const std::string key = std::to_string(r.spec.participant) + "/" + r.spec.limb_kind +
                                "/" + std::to_string(r.spec.repeat);
        if (r.spec.kind == EffectorKind::SkinGrip) {
            min_soft = std::min(min_soft, r.coverage_total);
            pairs[key][0] = r.coverage_total;
        } else {
            max_rigid_bottom = std::max(max_rigid_bottom, r.coverage_views[2]);
            pairs[key][1] = r.coverage_total;
        }
    }
    int dominated = 0;
    for (const auto& [key, totals] : pairs)
        if (totals[0] > totals[1]) ++dominated;
    const bool timely = sweep_seconds < 300.0;
    g.pass = incomplete == 0 && dominated == static_cast<int>(pairs.size()) &&
             min_soft >= 80.0 && max_rigid_bottom <= 50.0 && timely;
    g.detail = "gripper ahead on " + std::to_string(dominated) + "/" +
               std::to_string(pairs.size()) + " limbs, min gripper total " + fmt(min_soft, 1) +
               "%, max plate bottom " + fmt(max_rigid_bottom, 1) + "%, sweep " +
               fmt(sweep_seconds, 1) + " s" +
               (incomplete ? ", " + std::to_string(incomplete) + " incomplete" : "");
    return g;
}

Gate check_diameter_trend(const BatchResult& batch) {
    Gate g{"diameter trend", false, ""};
    const auto& slopes = batch.summary["coverage_slope_vs_diameter"];
    if (!slopes.contains("rigid_tool_arm") || !slopes.contains("skin_grip_arm")) {
        g.detail = "arm slopes missing from the summary";
        return g;
    }
    const double rigid = slopes["rigid_tool_arm"].get<double>();
    const double soft = slopes["skin_grip_arm"].get<double>();
    g.pass = rigid < 0.0 && std::abs(soft) < 0.5 * std::abs(rigid);
    g.detail = "plate slope " + fmt(rigid, 1) + " %/m, gripper slope " + fmt(soft, 1) +
               " %/m vs arm diameter";
    return g;
}

// ------------------------------------------------------ 3: closure settles

Gate check_closure(const Config& cfg) {
    Gate g{"closure convergence", true, ""};
    int worst_ticks = 0;
    double min_wrap = 1.0, worst_norm = 0.0;
    for (double d : {0.08, 0.10, 0.12, 0.14, 0.16}) {
        const LimbModel limb = build_limb(d, d, 0.30);
        const TrialSetup setup = make_setup(cfg, EffectorKind::SkinGrip, limb, 1);
        const SimResult res = run_trial(setup);
        if (res.status != TrialStatus::Completed) {
            g.pass = false;
            g.detail = "trial failed at diameter " + fmt(d) + ": " + res.message;
            return g;
        }
        for (const PassStats& p : res.passes) {
            worst_ticks = std::max(worst_ticks, p.closure_ticks);
            worst_norm = std::max(worst_norm, p.closure_error_norm);
            min_wrap = std::min(min_wrap, p.wrap_at_closure);
            if (p.closure_ticks > 600 || p.closure_error_norm >= 0.01 ||
                p.wrap_at_closure < 0.95)
                g.pass = false;
        }
    }
    g.detail = "five diameters, slowest closure " + std::to_string(worst_ticks) +
               " ticks, worst error norm " + fmt(worst_norm, 4) + ", min wrap " +
               fmt(min_wrap, 3);
    return g;
}

// -------------------------------------------------------- 4: sensing ramp

bool tendon_ramp_ok(double diameter, std::string& why) {
    const LimbModel limb = build_limb(diameter, diameter, 0.30);
    const SkinGripParams grip;
    const CapacitanceModel cap;
    auto* rng = static_cast<std::mt19937_64*>(nullptr);

    SkinGripState st;
    st.axial = 0.15;
    st.z = grip.cradle_height(limb.base_radius());
    const double theta_max = grip.finger.tendon_max / grip.finger.spool_radius;

    const int n = 200;
    std::vector<double> c(static_cast<size_t>(n) + 1);
    int tight_at = -1;
    for (int i = 0; i <= n; ++i) {
        const double th = theta_max * i / n;
        st.theta = {th, th};
        const SkinGripRig rig = make_rig(grip, st, limb);
        const auto patches = skin_grip_patches(grip, rig, limb);
        double mean = 0.0;
        for (size_t e = 0; e < 6; ++e) mean += raw_capacitance(cap, patches[e], rng);
        c[static_cast<size_t>(i)] = mean / 6.0;
        if (tight_at < 0) {
            // Tight grip: every finger station past the root collar is wrapped
            // onto the limb with the foam compressed to the sensing plateau.
            // The palm pad is excluded; its load does not follow the tendon.
            const double s_root = grip.finger.root_fraction * grip.finger.arc_length;
            bool tight = true;
            int counted = 0;
            for (const FingerTrace* tr : {&rig.left, &rig.right})
                for (const FingerStation& fs : tr->stations) {
                    if (fs.arc_pos < s_root) continue;
                    ++counted;
                    tight = tight && fs.wrapped && fs.pressure >= cap.plateau_pressure;
                }
            if (tight && counted > 0) tight_at = i;
        }
    }
    for (int i = 0; i < n; ++i)
        if (c[static_cast<size_t>(i) + 1] < c[static_cast<size_t>(i)] - 1e-9) {
            why = "reading drops at step " + std::to_string(i + 1) + " (diameter " +
                  fmt(diameter) + ")";
            return false;
        }
    if (c.back() < c.front() + 1.0) {
        why = "ramp too flat at diameter " + fmt(diameter);
        return false;
    }
    if (tight_at < 0 || tight_at >= n) {
        why = "tight contact never reached at diameter " + fmt(diameter);
        return false;
    }
    for (int i = tight_at; i <= n; ++i)
        if (std::abs(c[static_cast<size_t>(i)] - c.back()) > 0.01 * c.back()) {
            why = "post-contact drift above 1% at diameter " + fmt(diameter);
            return false;
        }
    why = "tight at " + fmt(100.0 * tight_at / n, 0) + "% travel, span " +
          fmt(c.front(), 1) + " -> " + fmt(c.back(), 1);
    return true;
}

Gate check_sensing_ramp() {
    Gate g{"sensing ramp", false, ""};
    std::string arm_note, leg_note;
    const bool arm = tendon_ramp_ok(0.08, arm_note);
    const bool leg = tendon_ramp_ok(0.16, leg_note);
    g.pass = arm && leg;
    g.detail = "arm scale: " + arm_note + "; leg scale: " + leg_note;
    return g;
}

// -------------------------------------------------- 5: controller algebra

Gate check_algebra() {
    Gate g{"controller algebra", false, ""};
    const int kCases = 10000;
    std::mt19937_64 rng(12345);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit_double(rng); };

    const SkinGripGains soft_gains;
    int bad = 0;

    for (int it = 0; it < kCases; ++it) {
        // Fixed point: readings pinned at their thresholds command nothing.
        Readings6 th{}, e{};
        for (double& v : th) v = uni(0.1, 0.9);
        e = skin_grip_errors(th, th);
        for (double v : e) bad += v != 0.0;
        std::array<double, 2> theta = {uni(0.0, 5.0), uni(0.0, 5.0)};
        const auto theta2 = motor_update(theta, soft_gains.k_theta, e);
        bad += theta2[0] != theta[0] || theta2[1] != theta[1];
        const double til = uni(0.1, 0.9), tir = uni(0.1, 0.9);
        const PoseErrors pe = skin_grip_pose_errors(til, tir, til, tir);
        bad += pe.z_s != 0.0 || pe.gamma_s != 0.0;

        const double v = uni(0.0, 1.0);
        Readings6 flat{}, rth{};
        for (double& x : flat) x = v;
        rth[1] = v;
        rth[4] = v;
        const RigidErrors fixed = rigid_errors(flat, rth);
        bad += fixed.x_r != 0.0 || fixed.z_r != 0.0 || fixed.alpha_r != 0.0;
        bad += std::abs(fixed.gamma_r) > 2e-15;

        // Linear scaling: doubled gains double the command, bitwise.
        Readings6 err{};
        for (double& x : err) x = uni(-0.5, 0.5);
        auto doubled = soft_gains.k_theta;
        for (auto& row : doubled)
            for (double& k : row) k *= 2.0;
        const std::array<double, 2> zero = {0.0, 0.0};
        const auto d1 = motor_update(zero, soft_gains.k_theta, err);
        const auto d2 = motor_update(zero, doubled, err);
        bad += d2[0] != 2.0 * d1[0] || d2[1] != 2.0 * d1[1];
        const double zs = uni(-1.0, 1.0);
        bad += (2.0 * soft_gains.k_z) * zs != 2.0 * (soft_gains.k_z * zs);

        // Common mode: a uniform shift leaves the differential errors alone
        // and moves the depth error by exactly twice the shift.
        Readings6 base{}, shifted{};
        const double shift = uni(0.0, 0.5);
        for (size_t i = 0; i < 6; ++i) {
            base[i] = uni(0.0, 0.5);
            shifted[i] = base[i] + shift;
        }
        const RigidErrors r0 = rigid_errors(base, rth);
        const RigidErrors r1 = rigid_errors(shifted, rth);
        bad += std::abs(r1.x_r - r0.x_r) > 1e-14;
        bad += std::abs(r1.alpha_r - r0.alpha_r) > 1e-14;
        bad += std::abs(r1.gamma_r - r0.gamma_r) > 1e-14;
        bad += std::abs((r0.z_r - r1.z_r) - 2.0 * shift) > 1e-14;
        const PoseErrors p0 = skin_grip_pose_errors(base[0], base[1], til, tir);
        const PoseErrors p1 = skin_grip_pose_errors(base[0] + shift, base[1] + shift, til, tir);
        bad += std::abs(p1.gamma_s - p0.gamma_s) > 1e-14;
    }

    g.pass = bad == 0;
    g.detail = std::to_string(kCases) + " randomized cases, " + std::to_string(bad) +
               " violations";
    return g;
}

// --------------------------------------------------- 6: metric cross-check

Gate check_oracle(const Config& cfg) {
    Gate g{"coverage oracle", false, ""};
    const auto specs = make_sweep(cfg);
    std::vector<double> gaps(specs.size(), 1e9);
    std::atomic<size_t> next{0};
    std::atomic<int> undefined{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= specs.size()) break;
            const TrialSpec& spec = specs[i];
            const LimbModel limb = build_limb(spec.base_diameter, spec.tip_diameter, spec.length);
            const SimResult res = run_trial(make_setup(cfg, spec.kind, limb, spec.seed));
            if (!res.coverage_defined) {
                ++undefined;
                continue;
            }
            const OracleReport rep = mc_coverage(res.before, res.after,
                                                 splitmix64(spec.seed), cfg.mc_samples);
            gaps[i] = std::abs(rep.total_pct - res.coverage.total_pct);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < pool_workers(); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    double worst = 0.0;
    for (double d : gaps) worst = std::max(worst, d);
    g.pass = undefined == 0 && worst <= 1.0;
    g.detail = std::to_string(specs.size()) + " trials, worst |grid - sampled| " +
               fmt(worst, 3) + " percentage points" +
               (undefined ? ", " + std::to_string(undefined.load()) + " undefined" : "");
    return g;
}

// -------------------------------------------------------- 7: determinism

Gate check_determinism(const fs::path& dir_a, const fs::path& dir_b, size_t n_trials) {
    Gate g{"determinism", true, ""};
    std::vector<std::string> names = {"batch.csv", "summary.json"};
    for (size_t i = 0; i < n_trials; ++i) names.push_back(trial_file_name(static_cast<int>(i)));
    for (const std::string& name : names)
        if (!same_bytes(dir_a / name, dir_b / name)) {
            g.pass = false;
            g.detail = "byte mismatch in " + name;
            return g;
        }
    g.detail = std::to_string(names.size()) + " files byte-identical across reruns";
    return g;
}

// ------------------------------------------------------ 8: taper tracking

Gate check_taper_tracking(const Config& cfg) {
    Gate g{"taper tracking", false, ""};
    const LimbModel limb = build_limb(0.14, 0.10, 0.30);
    const TrialSetup setup = make_setup(cfg, EffectorKind::SkinGrip, limb, 1);
    const SimResult res = run_trial(setup);
    if (res.status != TrialStatus::Completed || res.cleaning_ticks == 0) {
        g.detail = "taper trial failed: " + res.message;
        return g;
    }
    const double frac = static_cast<double>(res.cleaning_ticks_tracked) /
                        static_cast<double>(res.cleaning_ticks);
    g.pass = frac >= 0.95 && res.over_pressure_events == 0;
    g.detail = "all electrode errors inside 0.1 for " + fmt(100.0 * frac, 1) +
               "% of cleaning ticks, " + std::to_string(res.over_pressure_events) +
               " over-pressure events";
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path base =
        argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "capserv_acceptance";
    const fs::path dir_a = base / "a";
    const fs::path dir_b = base / "b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    Config cfg;  // defaults: 12 participants x 2 limbs x 2 effectors x 2 repeats

    BatchOptions opt;
    opt.out_dir = dir_a.string();
    opt.workers = pool_workers();
    const auto t0 = std::chrono::steady_clock::now();
    const BatchResult batch = run_batch(cfg, opt);
    const double sweep_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    opt.out_dir = dir_b.string();
    run_batch(cfg, opt);

    std::vector<Gate> gates;
    gates.push_back(check_dominance(batch, sweep_seconds));
    gates.push_back(check_diameter_trend(batch));
    gates.push_back(check_closure(cfg));
    gates.push_back(check_sensing_ramp());
    gates.push_back(check_algebra());
    gates.push_back(check_oracle(cfg));
    gates.push_back(check_determinism(dir_a, dir_b, batch.rows.size()));
    gates.push_back(check_taper_tracking(cfg));

    int failures = 0;
    for (size_t i = 0; i < gates.size(); ++i) {
        const Gate& g = gates[i];
        failures += g.pass ? 0 : 1;
        std::cout << (g.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << g.name << ": "
                  << g.detail << '\n';
    }
    return failures;
}
