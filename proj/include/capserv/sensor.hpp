#pragma once

// Capacitive sensing: the raw capacitance law, per-electrode sample windows,
// and min/max calibration with servo thresholds.
//
// Raw readings are synthesized from electrode-face sample points. Each point
// carries a distance to the skin; points in contact switch to a compression
// law driven by the local pressure proxy. Only normalized values ever reach
// the controllers, so the raw scale is arbitrary.

#include <array>
#include <cstdint>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"

namespace capserv {

inline constexpr int kPatchSamples = 9;   // 3x3 over the electrode face
inline constexpr int kWindowLength = 5;   // ticks averaged per reading

struct CapacitanceModel {
    double c_far = 100.0;            // baseline far from any body
    double c_gain = 50.0;            // added as distance -> 0
    double decay_length = 0.015;     // m, half-gain distance
    double compression_gain = 20.0;  // added per unit pressure proxy
    double plateau_pressure = 0.8;   // pressure proxy where the reading saturates
    double noise_sigma = 0.25;       // raw units (0.5% of c_gain)

    void validate() const {
        if (!(c_gain > 0.0) || !(decay_length > 0.0))
            throw ValidationError("capacitance model needs positive c_gain and decay_length");
        if (!(compression_gain >= 0.0) || !(plateau_pressure > 0.0) ||
            !(noise_sigma >= 0.0))
            throw ValidationError("capacitance model gains must be non-negative");
    }

    // Distance branch, valid for d > 0. Strictly decreasing in d and tends
    // to c_far as d grows.
    double from_distance(double d) const {
        return c_far + c_gain * decay_length / (d + decay_length);
    }

    // Contact branch; saturates exactly at the plateau pressure.
    double from_pressure(double pressure) const {
        return c_far + c_gain +
               compression_gain * std::min(pressure, plateau_pressure);
    }
};

// One electrode-face sample point as seen by the geometry layer.
struct PatchSample {
    double distance = 1.0;  // m to the skin; <= 0 means the shell is in contact
};

struct ElectrodePatch {
    std::array<PatchSample, kPatchSamples> samples{};
    double local_pressure = 0.0;  // pressure proxy under the electrode
};

// Uniform [0, 1) from raw engine bits; implementation-independent so seeded
// replays stay byte-identical.
template <typename Engine>
inline double unit_double(Engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Deterministic gaussian noise from raw engine bits (keeps trial replays
// byte-identical regardless of the standard library's distributions).
template <typename Engine>
inline double gaussian(Engine& rng, double sigma) {
    if (sigma <= 0.0) return 0.0;
    const double u1 = (static_cast<double>(rng()) + 1.0) / 18446744073709551616.0;
    const double u2 = static_cast<double>(rng()) / 18446744073709551616.0;
    return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// Average the capacitance law over the patch samples and add seeded noise.
// Pass a null engine pointer for noise-free evaluation.
template <typename Engine>
inline double raw_capacitance(const CapacitanceModel& model, const ElectrodePatch& patch,
                              Engine* rng) {
    double acc = 0.0;
    for (const auto& s : patch.samples)
        acc += s.distance > 0.0 ? model.from_distance(s.distance)
                                : model.from_pressure(patch.local_pressure);
    double v = acc / kPatchSamples;
    if (rng) v += gaussian(*rng, model.noise_sigma);
    return v;
}

// Ring buffer of the most recent raw samples for one electrode. Reading the
// mean before kWindowLength samples have arrived is a calibration error.
class SampleWindow {
  public:
    void push(double raw) {
        buf_[head_] = raw;
        head_ = (head_ + 1) % kWindowLength;
        if (count_ < kWindowLength) ++count_;
    }

    bool warm() const { return count_ == kWindowLength; }

    double mean() const {
        if (!warm()) throw CalibrationError("sample window read before warm-up");
        double s = 0.0;
        for (double v : buf_) s += v;
        return s / kWindowLength;
    }

    void reset() {
        count_ = 0;
        head_ = 0;
    }

  private:
    std::array<double, kWindowLength> buf_{};
    int head_ = 0;
    int count_ = 0;
};

// Per-electrode normalization bounds plus the servo thresholds recorded at
// the comfort pose. Soft profiles use back_thresholds + the two inner
// thresholds; rigid profiles use rigid_thresholds.
struct CalibrationProfile {
    std::vector<double> c_min;
    std::vector<double> c_max;
    std::array<double, 6> back_thresholds{};   // C_th^s1
    double inner_left_threshold = 0.0;         // C_th^s2
    double inner_right_threshold = 0.0;        // C_th^s3
    std::array<double, 6> rigid_thresholds{};  // C_th^r
    bool soft = true;

    size_t electrode_count() const { return c_min.size(); }

    void validate() const {
        if (c_min.size() != c_max.size() || c_min.empty())
            throw CalibrationError("profile bounds missing or mismatched");
        for (size_t i = 0; i < c_min.size(); ++i)
            if (!(c_max[i] > c_min[i]))
                throw CalibrationError("c_max <= c_min for electrode " + std::to_string(i));
        auto in_unit = [](double t) { return t > 0.0 && t < 1.0; };
        if (soft) {
            for (double t : back_thresholds)
                if (!in_unit(t)) throw CalibrationError("back threshold outside (0,1)");
            if (!in_unit(inner_left_threshold) || !in_unit(inner_right_threshold))
                throw CalibrationError("inner threshold outside (0,1)");
        } else {
            for (double t : rigid_thresholds)
                if (!in_unit(t)) throw CalibrationError("rigid threshold outside (0,1)");
        }
    }
};

// Windowed mean mapped to [0, 1] against the electrode's calibration bounds.
inline double normalize(const SampleWindow& window, const CalibrationProfile& calib,
                        size_t electrode) {
    if (electrode >= calib.electrode_count())
        throw CalibrationError("electrode index outside profile");
    const double lo = calib.c_min[electrode];
    const double hi = calib.c_max[electrode];
    if (!(hi > lo)) throw CalibrationError("degenerate calibration span");
    const double v = (window.mean() - lo) / (hi - lo);
    return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

// Raw frames captured during the calibration rehearsal. Each frame holds one
// raw sample per electrode; segments must each span at least a full window.
struct RehearsalTrace {
    std::vector<std::vector<double>> far;      // effector held away from the body
    std::vector<std::vector<double>> tight;    // pressed to the saturation plateau
    std::vector<std::vector<double>> comfort;  // held at the comfort pressure
    bool soft = true;
};

// Build a profile from a rehearsal: bounds from the far/tight segments and
// thresholds from the windowed comfort readings.
inline CalibrationProfile calibrate(const RehearsalTrace& trace) {
    auto check_segment = [](const std::vector<std::vector<double>>& seg, const char* name,
                            size_t n_elec) {
        if (seg.size() < static_cast<size_t>(kWindowLength))
            throw CalibrationError(std::string("rehearsal segment too short: ") + name);
        for (const auto& f : seg)
            if (f.size() != n_elec)
                throw CalibrationError(std::string("frame width mismatch in segment ") + name);
    };
    if (trace.far.empty()) throw CalibrationError("rehearsal missing far segment");
    const size_t n = trace.far.front().size();
    const size_t expected = trace.soft ? 8 : 6;
    if (n != expected) throw CalibrationError("rehearsal frame width does not match effector");
    check_segment(trace.far, "far", n);
    check_segment(trace.tight, "tight", n);
    check_segment(trace.comfort, "comfort", n);

    CalibrationProfile p;
    p.soft = trace.soft;
    p.c_min.assign(n, 1e300);
    p.c_max.assign(n, -1e300);
    for (const auto& f : trace.far)
        for (size_t i = 0; i < n; ++i) p.c_min[i] = std::min(p.c_min[i], f[i]);
    for (const auto& f : trace.tight)
        for (size_t i = 0; i < n; ++i) p.c_max[i] = std::max(p.c_max[i], f[i]);
    for (size_t i = 0; i < n; ++i)
        if (!(p.c_max[i] > p.c_min[i]))
            throw CalibrationError("flat rehearsal trace for electrode " + std::to_string(i));

    // Windowed mean of the comfort segment, averaged over every warm window
    // position so threshold noise shrinks with segment length.
    std::vector<double> th(n, 0.0);
    const size_t frames = trace.comfort.size();
    size_t windows = 0;
    std::vector<SampleWindow> w(n);
    for (size_t f = 0; f < frames; ++f) {
        for (size_t i = 0; i < n; ++i) w[i].push(trace.comfort[f][i]);
        if (f + 1 >= static_cast<size_t>(kWindowLength)) {
            ++windows;
            for (size_t i = 0; i < n; ++i)
                th[i] += (w[i].mean() - p.c_min[i]) / (p.c_max[i] - p.c_min[i]);
        }
    }
    for (size_t i = 0; i < n; ++i) th[i] /= static_cast<double>(windows);

    if (p.soft) {
        for (int i = 0; i < 6; ++i) p.back_thresholds[i] = th[i];
        p.inner_left_threshold = th[6];
        p.inner_right_threshold = th[7];
    } else {
        for (int i = 0; i < 6; ++i) p.rigid_thresholds[i] = th[i];
    }
    p.validate();
    return p;
}

}  // namespace capserv
