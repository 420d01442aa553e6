#pragma once

// Paired sweep over a simulated participant pool: every participant
// contributes one arm and one leg, each cleaned by both effectors with
// repeated seeds. Rows, aggregates, and plot data are written with
// deterministic bytes so identical configs reproduce identical reports.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "sim.hpp"

namespace capserv {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ValidationError("slope needs matched samples, at least two");
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    if (den <= 0.0) throw ValidationError("slope undefined for constant x");
    return num / den;
}

// -------------------------------------------------------------------- sweep

struct TrialSpec {
    int trial_id = 0;
    int participant = 0;
    std::string limb_kind;  // "arm" | "leg"
    EffectorKind kind = EffectorKind::SkinGrip;
    int repeat = 0;
    double base_diameter = 0.0;
    double tip_diameter = 0.0;
    double length = 0.0;
    std::uint64_t seed = 0;
};

inline std::vector<TrialSpec> make_sweep(const Config& cfg) {
    cfg.validate();
    std::vector<TrialSpec> specs;
    const bool soft_on = cfg.effector != "rigid_tool";
    const bool rigid_on = cfg.effector != "skin_grip";
    int id = 0;
    for (int p = 0; p < cfg.sweep.participants; ++p) {
        std::mt19937_64 body(splitmix64(cfg.seed ^ splitmix64(0x5050u + static_cast<unsigned>(p))));
        auto draw = [&](const std::array<double, 2>& r) {
            return r[0] + (r[1] - r[0]) * unit_double(body);
        };
        struct Dims { double base, tip, length; };
        auto limb_dims = [&](const std::array<double, 2>& d_range) {
            Dims d{};
            d.base = draw(d_range);
            d.tip = std::max(0.06, d.base * draw(cfg.sweep.taper_ratio));
            d.length = draw(cfg.sweep.limb_length);
            return d;
        };
        const Dims arm = limb_dims(cfg.sweep.arm_diameter);
        const Dims leg = limb_dims(cfg.sweep.leg_diameter);
        for (const auto& [kind_name, dims] :
             std::initializer_list<std::pair<const char*, Dims>>{{"arm", arm}, {"leg", leg}}) {
            for (EffectorKind kind : {EffectorKind::SkinGrip, EffectorKind::RigidTool}) {
                if (kind == EffectorKind::SkinGrip && !soft_on) continue;
                if (kind == EffectorKind::RigidTool && !rigid_on) continue;
                for (int rep = 0; rep < cfg.sweep.repeats; ++rep) {
                    TrialSpec ts;
                    ts.trial_id = id;
                    ts.participant = p;
                    ts.limb_kind = kind_name;
                    ts.kind = kind;
                    ts.repeat = rep;
                    ts.base_diameter = dims.base;
                    ts.tip_diameter = dims.tip;
                    ts.length = dims.length;
                    ts.seed = splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(id) + 1));
                    specs.push_back(ts);
                    ++id;
                }
            }
        }
    }
    return specs;
}

// --------------------------------------------------------------------- rows

struct BatchRow {
    TrialSpec spec;
    TrialStatus status = TrialStatus::Completed;
    int ticks = 0;
    double sim_seconds = 0.0;
    bool coverage_defined = false;
    double coverage_total = 0.0;
    std::array<double, 3> coverage_views = {0.0, 0.0, 0.0};
    int over_pressure_events = 0;
    bool over_travel = false;
    double min_wrap = 0.0;
    int closure_ticks_max = 0;
    int cleaning_ticks = 0;
    int cleaning_ticks_tracked = 0;
    double feed_error_max = 0.0;
};

inline BatchRow summarize(const TrialSpec& spec, const SimResult& res) {
    BatchRow row;
    row.spec = spec;
    row.status = res.status;
    row.ticks = res.ticks;
    row.sim_seconds = res.sim_seconds;
    row.coverage_defined = res.coverage_defined;
    if (res.coverage_defined) {
        row.coverage_total = res.coverage.total_pct;
        row.coverage_views = res.coverage.view_pct;
    }
    row.over_pressure_events = res.over_pressure_events;
    row.over_travel = res.over_travel;
    row.min_wrap = res.min_wrap_at_closure();
    for (const auto& p : res.passes) {
        row.closure_ticks_max = std::max(row.closure_ticks_max, p.closure_ticks);
        row.feed_error_max =
            std::max(row.feed_error_max, std::abs(p.feed_distance - spec.length));
    }
    row.cleaning_ticks = res.cleaning_ticks;
    row.cleaning_ticks_tracked = res.cleaning_ticks_tracked;
    return row;
}

// Shortest round-trip decimal form; locale-free and stable across runs.
inline std::string num(double v) { return nlohmann::json(v).dump(); }

inline std::string csv_header() {
    return "trial_id,participant,limb_kind,effector,repeat,seed,base_diameter,tip_diameter,"
           "mean_diameter,length,status,ticks,sim_seconds,coverage_total,coverage_top,"
           "coverage_side,coverage_bottom,over_pressure_events,over_travel,min_wrap,"
           "closure_ticks_max,cleaning_ticks,cleaning_ticks_tracked,feed_error_max";
}

inline std::string to_csv(const BatchRow& r) {
    std::ostringstream os;
    const auto& s = r.spec;
    os << s.trial_id << ',' << s.participant << ',' << s.limb_kind << ','
       << effector_name(s.kind) << ',' << s.repeat << ',' << s.seed << ','
       << num(s.base_diameter) << ',' << num(s.tip_diameter) << ','
       << num(0.5 * (s.base_diameter + s.tip_diameter)) << ',' << num(s.length) << ','
       << status_name(r.status) << ',' << r.ticks << ',' << num(r.sim_seconds) << ',';
    if (r.coverage_defined)
        os << num(r.coverage_total) << ',' << num(r.coverage_views[0]) << ','
           << num(r.coverage_views[1]) << ',' << num(r.coverage_views[2]);
    else
        os << ",,,";
    os << ',' << r.over_pressure_events << ',' << (r.over_travel ? 1 : 0) << ','
       << num(r.min_wrap) << ',' << r.closure_ticks_max << ',' << r.cleaning_ticks << ','
       << r.cleaning_ticks_tracked << ',' << num(r.feed_error_max);
    return os.str();
}

inline BatchRow row_from_csv(const std::string& line) {
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
        if (c == ',') { f.push_back(cur); cur.clear(); }
        else cur.push_back(c);
    }
    f.push_back(cur);
    if (f.size() != 24) throw ValidationError("malformed batch row: " + line);
    BatchRow r;
    r.spec.trial_id = std::stoi(f[0]);
    r.spec.participant = std::stoi(f[1]);
    r.spec.limb_kind = f[2];
    r.spec.kind = f[3] == "skin_grip" ? EffectorKind::SkinGrip : EffectorKind::RigidTool;
    r.spec.repeat = std::stoi(f[4]);
    r.spec.seed = std::stoull(f[5]);
    r.spec.base_diameter = std::stod(f[6]);
    r.spec.tip_diameter = std::stod(f[7]);
    r.spec.length = std::stod(f[9]);
    r.status = f[10] == "completed"        ? TrialStatus::Completed
               : f[10] == "closure_stall"  ? TrialStatus::ClosureStall
                                           : TrialStatus::ApproachOverrun;
    r.ticks = std::stoi(f[11]);
    r.sim_seconds = std::stod(f[12]);
    r.coverage_defined = !f[13].empty();
    if (r.coverage_defined) {
        r.coverage_total = std::stod(f[13]);
        r.coverage_views = {std::stod(f[14]), std::stod(f[15]), std::stod(f[16])};
    }
    r.over_pressure_events = std::stoi(f[17]);
    r.over_travel = f[18] == "1";
    r.min_wrap = std::stod(f[19]);
    r.closure_ticks_max = std::stoi(f[20]);
    r.cleaning_ticks = std::stoi(f[21]);
    r.cleaning_ticks_tracked = std::stoi(f[22]);
    r.feed_error_max = std::stod(f[23]);
    return r;
}

// --------------------------------------------------------------- aggregates

inline nlohmann::json aggregate_rows(const std::vector<BatchRow>& rows) {
    nlohmann::json summary;
    summary["schema_version"] = 1;
    summary["rows"] = rows.size();

    int failures = 0;
    int over_pressure_total = 0;
    bool over_travel_any = false;
    std::map<std::string, std::vector<const BatchRow*>> by_effector;
    for (const auto& r : rows) {
        if (r.status != TrialStatus::Completed) ++failures;
        over_pressure_total += r.over_pressure_events;
        over_travel_any = over_travel_any || r.over_travel;
        by_effector[effector_name(r.spec.kind)].push_back(&r);
    }
    summary["failures"] = failures;
    summary["over_pressure_total"] = over_pressure_total;
    summary["over_travel_any"] = over_travel_any;

    auto stats = [](const std::vector<double>& v) {
        nlohmann::json s;
        if (v.empty()) return s;
        double mn = v[0], mx = v[0], mean = 0.0;
        for (double x : v) { mn = std::min(mn, x); mx = std::max(mx, x); mean += x; }
        s["mean"] = mean / static_cast<double>(v.size());
        s["min"] = mn;
        s["max"] = mx;
        s["count"] = v.size();
        return s;
    };

    nlohmann::json eff_json;
    nlohmann::json slope_json;
    static const char* kViewNames[3] = {"top", "side", "bottom"};
    for (const auto& [name, prs] : by_effector) {
        nlohmann::json e;
        std::vector<double> total;
        std::array<std::vector<double>, 3> views;
        for (const auto* r : prs) {
            if (!r->coverage_defined) continue;
            total.push_back(r->coverage_total);
            for (int v = 0; v < 3; ++v)
                views[static_cast<size_t>(v)].push_back(
                    r->coverage_views[static_cast<size_t>(v)]);
        }
        e["coverage_total"] = stats(total);
        for (int v = 0; v < 3; ++v)
            e[std::string("coverage_") + kViewNames[v]] = stats(views[static_cast<size_t>(v)]);
        eff_json[name] = e;

        for (const char* limb_kind : {"arm", "leg"}) {
            std::vector<double> xs, ys;
            for (const auto* r : prs) {
                if (r->spec.limb_kind != limb_kind || !r->coverage_defined) continue;
                xs.push_back(0.5 * (r->spec.base_diameter + r->spec.tip_diameter));
                ys.push_back(r->coverage_total);
            }
            if (xs.size() >= 2)
                slope_json[name + std::string("_") + limb_kind] = lsq_slope(xs, ys);
        }
    }
    summary["effectors"] = eff_json;
    summary["coverage_slope_vs_diameter"] = slope_json;
    return summary;
}

// ------------------------------------------------------------------- runner

struct BatchOptions {
    std::string out_dir = "out";
    int workers = 1;
    bool telemetry = true;
    bool plot_data = false;
};

struct BatchResult {
    std::vector<BatchRow> rows;
    int failures = 0;
    nlohmann::json summary;
    std::string csv_path;
    std::string summary_path;
};

inline std::string trial_file_name(int trial_id) {
    std::ostringstream os;
    os << "trial_" << std::setw(4) << std::setfill('0') << trial_id << ".jsonl";
    return os.str();
}

inline void write_plot_data(const std::string& out_dir, const std::vector<BatchRow>& rows) {
    for (const char* eff : {"skin_grip", "rigid_tool"}) {
        for (const char* limb_kind : {"arm", "leg"}) {
            std::ofstream f(out_dir + "/scatter_" + eff + "_" + limb_kind + ".csv");
            f << "mean_diameter,coverage_total\n";
            for (const auto& r : rows) {
                if (std::string(effector_name(r.spec.kind)) != eff ||
                    r.spec.limb_kind != limb_kind || !r.coverage_defined)
                    continue;
                f << num(0.5 * (r.spec.base_diameter + r.spec.tip_diameter)) << ','
                  << num(r.coverage_total) << '\n';
            }
        }
    }
    std::ofstream bar(out_dir + "/bar_view_coverage.csv");
    bar << "effector,view,mean_coverage\n";
    static const char* kViewNames[3] = {"top", "side", "bottom"};
    for (const char* eff : {"skin_grip", "rigid_tool"}) {
        std::array<double, 3> sums = {0.0, 0.0, 0.0};
        int n = 0;
        for (const auto& r : rows) {
            if (std::string(effector_name(r.spec.kind)) != eff || !r.coverage_defined) continue;
            for (int v = 0; v < 3; ++v) sums[static_cast<size_t>(v)] += r.coverage_views[static_cast<size_t>(v)];
            ++n;
        }
        if (n == 0) continue;
        for (int v = 0; v < 3; ++v)
            bar << eff << ',' << kViewNames[v] << ',' << num(sums[static_cast<size_t>(v)] / n)
                << '\n';
    }
}

inline BatchResult run_batch(const Config& cfg, const BatchOptions& opt) {
    const auto specs = make_sweep(cfg);
    std::filesystem::create_directories(opt.out_dir);

    std::vector<BatchRow> rows(specs.size());
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= specs.size()) break;
            const TrialSpec& spec = specs[i];
            const LimbModel limb =
                build_limb(spec.base_diameter, spec.tip_diameter, spec.length);
            const TrialSetup setup = make_setup(cfg, spec.kind, limb, spec.seed);
            if (opt.telemetry) {
                std::ofstream tf(opt.out_dir + "/" + trial_file_name(spec.trial_id));
                rows[i] = summarize(spec, run_trial(setup, &tf));
            } else {
                rows[i] = summarize(spec, run_trial(setup));
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(opt.workers, static_cast<int>(specs.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_workers));
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    BatchResult res;
    res.rows = std::move(rows);
    for (const auto& r : res.rows)
        if (r.status != TrialStatus::Completed) ++res.failures;

    res.csv_path = opt.out_dir + "/batch.csv";
    std::ofstream csv(res.csv_path);
    csv << csv_header() << '\n';
    for (const auto& r : res.rows) csv << to_csv(r) << '\n';

    res.summary = aggregate_rows(res.rows);
    res.summary_path = opt.out_dir + "/summary.json";
    std::ofstream sj(res.summary_path);
    sj << res.summary.dump(2) << '\n';

    if (opt.plot_data) write_plot_data(opt.out_dir, res.rows);
    return res;
}

inline std::vector<BatchRow> load_rows(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw ValidationError("cannot open batch csv: " + csv_path);
    std::string line;
    if (!std::getline(in, line) || line != csv_header())
        throw ValidationError("unrecognized batch csv header");
    std::vector<BatchRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(row_from_csv(line));
    }
    return rows;
}

}  // namespace capserv
