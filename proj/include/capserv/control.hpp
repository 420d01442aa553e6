#pragma once

// Capacitive-servo controllers: the proportional update laws and the two
// phase machines (soft gripper: Approach -> Closure -> Cleaning; rigid tool:
// Approach -> Cleaning). Both consume normalized readings only.

#include <array>
#include <cmath>
#include <cstddef>

#include "errors.hpp"
#include "sensor.hpp"

namespace capserv {

using Readings6 = std::array<double, 6>;
using Readings8 = std::array<double, 8>;

// ------------------------------------------------------------- update laws

// Back-electrode error vector: thresholds minus readings, light contact
// reads positive and tightens the wrap.
inline Readings6 skin_grip_errors(const Readings6& c_norm, const Readings6& thresholds) {
    Readings6 e{};
    for (size_t i = 0; i < 6; ++i) e[i] = thresholds[i] - c_norm[i];
    return e;
}

inline double error_norm(const Readings6& e) {
    double s = 0.0;
    for (double v : e) s += v * v;
    return std::sqrt(s);
}

// Proportional motor update: theta' = theta + K e.
inline std::array<double, 2> motor_update(const std::array<double, 2>& theta,
                                          const std::array<Readings6, 2>& k_theta,
                                          const Readings6& e) {
    std::array<double, 2> out = theta;
    for (size_t m = 0; m < 2; ++m) {
        double acc = 0.0;
        for (size_t i = 0; i < 6; ++i) acc += k_theta[m][i] * e[i];
        out[m] += acc;
    }
    return out;
}

struct PoseErrors {
    double z_s = 0.0;
    double gamma_s = 0.0;
};

// Depth and roll errors from the inner electrodes. The legacy form of the
// depth error does not vanish at the setpoint; the corrected form is the
// default and the legacy one stays available behind a switch.
inline PoseErrors skin_grip_pose_errors(double c7, double c8, double th_inner_left,
                                        double th_inner_right, bool legacy_z_form = false) {
    PoseErrors pe;
    pe.z_s = legacy_z_form ? -c7 - th_inner_left : th_inner_left - c7;
    pe.gamma_s = (c7 - th_inner_left) - (c8 - th_inner_right);
    return pe;
}

struct RigidErrors {
    double x_r = 0.0;
    double z_r = 0.0;
    double alpha_r = 0.0;
    double gamma_r = 0.0;
};

// Pose errors of the plate from its six electrodes (labels 1..6 map to
// indices 0..5): lateral from the corner pairs, depth from the wide middle
// pair against its thresholds, yaw from the corner twist, roll from the
// front/middle/back split.
inline RigidErrors rigid_errors(const Readings6& c, const Readings6& th) {
    RigidErrors re;
    re.x_r = c[0] - c[2] + c[3] - c[5];
    re.z_r = (th[1] - c[1]) + (th[4] - c[4]);
    re.alpha_r = c[3] - c[0] + c[2] - c[5];
    re.gamma_r = c[0] + c[1] + c[2] - c[3] - c[4] - c[5];
    return re;
}

// ------------------------------------------------------------------- gains

struct SkinGripGains {
    std::array<Readings6, 2> k_theta{Readings6{0.25, 0.25, 0.25, 0.0, 0.0, 0.0},
                                     Readings6{0.0, 0.0, 0.0, 0.25, 0.25, 0.25}};
    double k_z = -0.02;     // m per unit depth error
    double k_gamma = 0.6;   // rad per unit roll error
    bool legacy_z_form = false;
};

struct RigidGains {
    double k_x = -0.02;
    double k_z = -0.008;
    double k_alpha = -0.005;
    double k_gamma = 0.2;
};

// ------------------------------------------------------------ soft machine

enum class SoftPhase { Approach, Closure, Cleaning };

struct SoftCommand {
    double dz = 0.0;
    double dgamma = 0.0;
    std::array<double, 2> theta{0.0, 0.0};  // absolute motor targets after the tick
    bool feed = false;
    bool stalled = false;
};

// Alg. 1 phase machine for one pass. Owns phase state and the motor targets;
// pose integration happens in the simulation loop.
class SkinGripController {
  public:
    SkinGripController(const SkinGripGains& gains, const CalibrationProfile& calib,
                       double theta_max, double approach_step = 0.003, double eta = 0.01,
                       int stall_ticks = 600)
        : gains_(gains),
          calib_(calib),
          theta_max_(theta_max),
          approach_step_(approach_step),
          eta_(eta),
          stall_ticks_(stall_ticks) {
        if (!calib.soft) throw ValidationError("soft controller given a rigid profile");
        if (!(theta_max > 0.0)) throw ValidationError("motor limit must be positive");
    }

    SoftPhase phase() const { return phase_; }
    const Readings6& last_errors() const { return last_e_; }
    double last_error_norm() const { return last_norm_; }
    bool over_travel() const { return over_travel_; }

    // Start the next pass: re-open and re-run the phase ladder.
    void begin_pass(const std::array<double, 2>& theta) {
        phase_ = SoftPhase::Approach;
        closure_ticks_ = 0;
        theta_ = theta;
    }

    SoftCommand step(const Readings8& c) {
        SoftCommand cmd;
        cmd.theta = theta_;
        const double th2 = calib_.inner_left_threshold;
        const double th3 = calib_.inner_right_threshold;
        Readings6 back{};
        for (size_t i = 0; i < 6; ++i) back[i] = c[i];
        last_e_ = skin_grip_errors(back, back_thresholds());
        last_norm_ = error_norm(last_e_);

        if (phase_ == SoftPhase::Approach) {
            if (c[6] < th2) {
                cmd.dz = -approach_step_;
                return cmd;
            }
            phase_ = SoftPhase::Closure;
        }
        if (phase_ == SoftPhase::Closure) {
            if (last_norm_ < eta_) {
                phase_ = SoftPhase::Cleaning;
            } else {
                apply_motors(last_e_);
                cmd.theta = theta_;
                if (++closure_ticks_ >= stall_ticks_) cmd.stalled = true;
                return cmd;
            }
        }
        // Cleaning: depth/roll servo plus the wrap servo, feeding.
        const PoseErrors pe =
            skin_grip_pose_errors(c[6], c[7], th2, th3, gains_.legacy_z_form);
        cmd.dz = gains_.k_z * pe.z_s;
        cmd.dgamma = gains_.k_gamma * pe.gamma_s;
        apply_motors(last_e_);
        cmd.theta = theta_;
        cmd.feed = true;
        return cmd;
    }

  private:
    Readings6 back_thresholds() const {
        Readings6 th{};
        for (size_t i = 0; i < 6; ++i) th[i] = calib_.back_thresholds[i];
        return th;
    }

    void apply_motors(const Readings6& e) {
        theta_ = motor_update(theta_, gains_.k_theta, e);
        for (double& t : theta_) {
            if (t < 0.0) { t = 0.0; over_travel_ = true; }
            if (t > theta_max_) { t = theta_max_; over_travel_ = true; }
        }
    }

    SkinGripGains gains_;
    CalibrationProfile calib_;
    double theta_max_;
    double approach_step_;
    double eta_;
    int stall_ticks_;
    SoftPhase phase_ = SoftPhase::Approach;
    int closure_ticks_ = 0;
    std::array<double, 2> theta_{0.0, 0.0};
    Readings6 last_e_{};
    double last_norm_ = 0.0;
    bool over_travel_ = false;
};

// ----------------------------------------------------------- rigid machine

enum class RigidPhase { Approach, Cleaning };

struct RigidCommand {
    double dx = 0.0;
    double dz = 0.0;
    double dalpha = 0.0;
    double dgamma = 0.0;
    bool feed = false;
};

class RigidController {
  public:
    RigidController(const RigidGains& gains, const CalibrationProfile& calib,
                    double approach_step = 0.003)
        : gains_(gains), calib_(calib), approach_step_(approach_step) {
        if (calib.soft) throw ValidationError("rigid controller given a soft profile");
    }

    RigidPhase phase() const { return phase_; }
    const RigidErrors& last_errors() const { return last_e_; }

    void begin_pass() { phase_ = RigidPhase::Approach; }

    RigidCommand step(const Readings6& c) {
        RigidCommand cmd;
        Readings6 th{};
        for (size_t i = 0; i < 6; ++i) th[i] = calib_.rigid_thresholds[i];
        last_e_ = rigid_errors(c, th);

        if (phase_ == RigidPhase::Approach) {
            bool all_below = true;
            for (size_t i = 0; i < 6; ++i)
                if (c[i] >= th[i]) { all_below = false; break; }
            if (all_below) {
                cmd.dz = -approach_step_;
                return cmd;
            }
            phase_ = RigidPhase::Cleaning;
        }
        cmd.dx = gains_.k_x * last_e_.x_r;
        cmd.dz = gains_.k_z * last_e_.z_r;
        cmd.dalpha = gains_.k_alpha * last_e_.alpha_r;
        cmd.dgamma = gains_.k_gamma * last_e_.gamma_r;
        cmd.feed = true;
        return cmd;
    }

  private:
    RigidGains gains_;
    CalibrationProfile calib_;
    double approach_step_;
    RigidPhase phase_ = RigidPhase::Approach;
    RigidErrors last_e_{};
};

}  // namespace capserv
