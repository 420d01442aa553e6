#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "capserv/sensor.hpp"

using namespace capserv;
using Catch::Approx;

namespace {

ElectrodePatch uniform_patch(double distance, double pressure = 0.0) {
    ElectrodePatch p;
    for (auto& s : p.samples) s.distance = distance;
    p.local_pressure = pressure;
    return p;
}

std::mt19937_64* no_noise() { return nullptr; }

}  // namespace

TEST_CASE("distance law spot values") {
    const CapacitanceModel m;
    CHECK(m.from_distance(0.015) == 125.0);  // half-gain at the decay length
    CHECK(m.from_distance(0.0) == 150.0);
    CHECK(m.from_distance(0.045) == Approx(112.5).epsilon(1e-14));
    CHECK(m.from_distance(10.0) == Approx(100.0).epsilon(1e-3));

    double prev = m.from_distance(0.0);
    for (double d = 0.001; d < 0.2; d += 0.001) {
        const double v = m.from_distance(d);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("contact law saturates at the plateau") {
    const CapacitanceModel m;
    CHECK(m.from_pressure(0.0) == 150.0);
    CHECK(m.from_pressure(0.3) == 156.0);
    CHECK(m.from_pressure(0.8) == 166.0);
    CHECK(m.from_pressure(1.5) == 166.0);
    CHECK(m.from_pressure(100.0) == 166.0);

    double prev = m.from_pressure(0.0);
    for (double p = 0.05; p <= 1.2; p += 0.05) {
        const double v = m.from_pressure(p);
        CHECK(v >= prev);
        prev = v;
    }
    // Contact always reads above any distance reading.
    CHECK(m.from_pressure(0.0) >= m.from_distance(1e-9));
}

TEST_CASE("capacitance model validation") {
    CapacitanceModel m;
    m.c_gain = 0.0;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = {};
    m.decay_length = -1.0;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m = {};
    m.noise_sigma = -0.1;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    CHECK_NOTHROW(CapacitanceModel{}.validate());
}

TEST_CASE("patch readings average the samples") {
    const CapacitanceModel m;
    CHECK(raw_capacitance(m, uniform_patch(0.015), no_noise()) == 125.0);

    // 4 samples at the decay length, 5 in contact at pressure 0.5.
    ElectrodePatch mixed;
    for (int i = 0; i < 4; ++i) mixed.samples[i].distance = 0.015;
    for (int i = 4; i < kPatchSamples; ++i) mixed.samples[i].distance = -0.001;
    mixed.local_pressure = 0.5;
    CHECK(raw_capacitance(m, mixed, no_noise()) == Approx(144.44444444444446).epsilon(1e-14));

    // Zero distance counts as contact, not as the distance-law limit.
    ElectrodePatch touching = uniform_patch(0.0, 0.8);
    CHECK(raw_capacitance(m, touching, no_noise()) == 166.0);
}

TEST_CASE("seeded noise replays byte-identically") {
    const CapacitanceModel m;
    const ElectrodePatch p = uniform_patch(0.02);
    std::mt19937_64 a(42), b(42), c(43);
    const double va1 = raw_capacitance(m, p, &a);
    const double vb1 = raw_capacitance(m, p, &b);
    CHECK(va1 == vb1);
    CHECK(raw_capacitance(m, p, &a) == raw_capacitance(m, p, &b));
    CHECK(raw_capacitance(m, p, &c) != va1);

    // Noise is unbiased around the clean reading.
    std::mt19937_64 e(7);
    const double clean = raw_capacitance(m, p, no_noise());
    double acc = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) acc += raw_capacitance(m, p, &e);
    CHECK(acc / n == Approx(clean).margin(5.0 * m.noise_sigma / std::sqrt(double(n))));
}

TEST_CASE("gaussian helper moments") {
    std::mt19937_64 e(11);
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = gaussian(e, 1.0);
        s += x;
        s2 += x * x;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(mean == Approx(0.0).margin(0.016));
    CHECK(var == Approx(1.0).margin(0.03));
    CHECK(gaussian(e, 0.0) == 0.0);
    CHECK(gaussian(e, -1.0) == 0.0);
}

TEST_CASE("unit_double stays in [0,1)") {
    std::mt19937_64 e(3), f(3);
    double lo = 1.0, hi = 0.0, acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = unit_double(e);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        acc += u;
        CHECK(u == unit_double(f));
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(acc / n == Approx(0.5).margin(0.005));
}

TEST_CASE("sample window warm-up and rollover") {
    SampleWindow w;
    CHECK(!w.warm());
    CHECK_THROWS_AS(w.mean(), CalibrationError);
    for (double v : {1.0, 2.0, 3.0, 4.0}) {
        w.push(v);
        CHECK(!w.warm());
    }
    w.push(5.0);
    CHECK(w.warm());
    CHECK(w.mean() == 3.0);
    w.push(6.0);  // drops the oldest sample
    CHECK(w.mean() == 4.0);
    w.reset();
    CHECK(!w.warm());
    CHECK_THROWS_AS(w.mean(), CalibrationError);
}

namespace {

CalibrationProfile span_profile(double lo, double hi) {
    CalibrationProfile p;
    p.c_min = {lo};
    p.c_max = {hi};
    p.soft = false;
    for (auto& t : p.rigid_thresholds) t = 0.5;
    return p;
}

}  // namespace

TEST_CASE("normalization maps the span to [0,1]") {
    SampleWindow w;
    for (double v : {100.0, 100.0, 160.0, 160.0, 130.0}) w.push(v);
    const CalibrationProfile p = span_profile(100.0, 160.0);
    CHECK(normalize(w, p, 0) == 0.5);

    SampleWindow low;
    for (int i = 0; i < kWindowLength; ++i) low.push(90.0);
    CHECK(normalize(low, p, 0) == 0.0);

    SampleWindow high;
    for (int i = 0; i < kWindowLength; ++i) high.push(200.0);
    CHECK(normalize(high, p, 0) == 1.0);

    CHECK_THROWS_AS(normalize(w, p, 1), CalibrationError);
    CHECK_THROWS_AS(normalize(w, span_profile(100.0, 100.0), 0), CalibrationError);
}

TEST_CASE("profile validation") {
    CalibrationProfile p;
    CHECK_THROWS_AS(p.validate(), CalibrationError);  // empty bounds

    p.c_min = {0.0, 0.0};
    p.c_max = {1.0};
    CHECK_THROWS_AS(p.validate(), CalibrationError);  // mismatched sizes

    p.c_max = {1.0, 0.0};
    CHECK_THROWS_AS(p.validate(), CalibrationError);  // c_max <= c_min

    p.c_max = {1.0, 1.0};
    p.soft = true;
    CHECK_THROWS_AS(p.validate(), CalibrationError);  // thresholds at 0

    for (auto& t : p.back_thresholds) t = 0.5;
    p.inner_left_threshold = 0.5;
    p.inner_right_threshold = 1.0;  // not strictly inside (0,1)
    CHECK_THROWS_AS(p.validate(), CalibrationError);
    p.inner_right_threshold = 0.5;
    CHECK_NOTHROW(p.validate());
}

namespace {

RehearsalTrace constant_trace(size_t width, double far, double tight, double comfort,
                              bool soft) {
    RehearsalTrace t;
    t.soft = soft;
    for (int i = 0; i < 6; ++i) {
        t.far.push_back(std::vector<double>(width, far));
        t.tight.push_back(std::vector<double>(width, tight));
        t.comfort.push_back(std::vector<double>(width, comfort));
    }
    return t;
}

}  // namespace

TEST_CASE("calibration from a constant rehearsal") {
    const CalibrationProfile p = calibrate(constant_trace(8, 100.0, 160.0, 130.0, true));
    CHECK(p.soft);
    CHECK(p.electrode_count() == 8);
    for (double v : p.c_min) CHECK(v == 100.0);
    for (double v : p.c_max) CHECK(v == 160.0);
    for (double t : p.back_thresholds) CHECK(t == 0.5);
    CHECK(p.inner_left_threshold == 0.5);
    CHECK(p.inner_right_threshold == 0.5);

    const CalibrationProfile r = calibrate(constant_trace(6, 100.0, 160.0, 145.0, false));
    CHECK(!r.soft);
    CHECK(r.electrode_count() == 6);
    for (double t : r.rigid_thresholds) CHECK(t == 0.75);
}

TEST_CASE("calibration bounds take extremes over frames") {
    RehearsalTrace t = constant_trace(6, 100.0, 160.0, 130.0, false);
    t.far[2][1] = 95.0;    // one dip widens electrode 1's span
    t.tight[4][3] = 170.0;
    const CalibrationProfile p = calibrate(t);
    CHECK(p.c_min[1] == 95.0);
    CHECK(p.c_min[0] == 100.0);
    CHECK(p.c_max[3] == 170.0);
    CHECK(p.c_max[0] == 160.0);
    // Thresholds normalize against the widened spans.
    CHECK(p.rigid_thresholds[0] == 0.5);
    CHECK(p.rigid_thresholds[1] == Approx((130.0 - 95.0) / 65.0).epsilon(1e-14));
}

TEST_CASE("calibration error paths") {
    RehearsalTrace short_far = constant_trace(8, 100.0, 160.0, 130.0, true);
    short_far.far.resize(4);
    CHECK_THROWS_AS(calibrate(short_far), CalibrationError);

    RehearsalTrace ragged = constant_trace(8, 100.0, 160.0, 130.0, true);
    ragged.comfort[3].resize(7);
    CHECK_THROWS_AS(calibrate(ragged), CalibrationError);

    // Frame width must match the effector's electrode count.
    RehearsalTrace wrong_width = constant_trace(6, 100.0, 160.0, 130.0, true);
    CHECK_THROWS_AS(calibrate(wrong_width), CalibrationError);

    RehearsalTrace flat = constant_trace(8, 130.0, 130.0, 130.0, true);
    CHECK_THROWS_AS(calibrate(flat), CalibrationError);

    RehearsalTrace empty;
    CHECK_THROWS_AS(calibrate(empty), CalibrationError);
}
