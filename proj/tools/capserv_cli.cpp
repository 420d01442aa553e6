// Command line front end: single trials, the paired sweep, report
// re-aggregation, and the Monte Carlo coverage cross-check.
//
// Output directory resolution: --out flag, then the CAPSERV_OUT environment
// variable, then the configured out_dir.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "capserv/batch.hpp"
#include "capserv/oracle.hpp"

using namespace capserv;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string effector;  // soft | rigid (canonical names also accepted)
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_effector) {
    cmd->add_option("-c,--config", args.config_path, "JSON config file");
    cmd->add_option("-o,--out", args.out, "output directory");
    cmd->add_option_function<std::uint64_t>(
           "-s,--seed",
           [&args](const std::uint64_t& v) {
               args.seed = v;
               args.seed_set = true;
           },
           "random seed override");
    if (with_effector)
        cmd->add_option("-e,--effector", args.effector, "effector: soft | rigid")
            ->check(CLI::IsMember({"soft", "rigid", "skin_grip", "rigid_tool"}));
}

Config load_or_default(const CommonArgs& args) {
    Config cfg = args.config_path.empty() ? Config{} : load_config(args.config_path);
    if (args.seed_set) cfg.seed = args.seed;
    if (!args.effector.empty()) {
        cfg.effector =
            (args.effector == "soft" || args.effector == "skin_grip") ? "skin_grip"
                                                                      : "rigid_tool";
    }
    return cfg;
}

std::string resolve_out(const CommonArgs& args, const Config& cfg) {
    if (!args.out.empty()) return args.out;
    if (const char* env = std::getenv("CAPSERV_OUT"); env && *env) return env;
    return cfg.out_dir;
}

// Single-trial effector: an explicit choice wins, a single-effector config
// follows, and the paired default falls back to the gripper.
EffectorKind single_kind(const Config& cfg) {
    return cfg.effector == "rigid_tool" ? EffectorKind::RigidTool : EffectorKind::SkinGrip;
}

void print_trial(const SimResult& res, const std::string& telemetry_path) {
    std::cout << "status: " << status_name(res.status);
    if (!res.message.empty()) std::cout << " (" << res.message << ")";
    std::cout << '\n';
    std::cout << "ticks: " << res.ticks << " (" << res.sim_seconds << " s simulated)\n";
    if (res.coverage_defined) {
        const auto& c = res.coverage;
        std::cout << "coverage: total " << c.total_pct << "% (top " << c.view_pct[0]
                  << " / side " << c.view_pct[1] << " / bottom " << c.view_pct[2] << ")\n";
    } else {
        std::cout << "coverage: undefined (no creamed cells)\n";
    }
    if (!res.passes.empty() && res.passes.front().wrap_at_closure > 0.0)
        std::cout << "min wrap at closure: " << res.min_wrap_at_closure() << '\n';
    std::cout << "over-pressure events: " << res.over_pressure_events << '\n';
    if (!telemetry_path.empty()) std::cout << "telemetry: " << telemetry_path << '\n';
}

int run_simulate(const CommonArgs& args, bool no_telemetry) {
    const Config cfg = load_or_default(args);
    const EffectorKind kind = single_kind(cfg);
    const TrialSetup setup = make_setup(cfg, kind, cfg.build(), cfg.seed);

    std::string telemetry_path;
    SimResult res;
    if (no_telemetry) {
        res = run_trial(setup);
    } else {
        const fs::path out = resolve_out(args, cfg);
        fs::create_directories(out);
        telemetry_path = (out / (std::string("trial_") + effector_name(kind) + ".jsonl")).string();
        std::ofstream tf(telemetry_path);
        res = run_trial(setup, &tf);
    }
    print_trial(res, telemetry_path);
    return res.failed() ? 1 : 0;
}

int run_batch_cmd(const CommonArgs& args, int workers, bool workers_set, bool plots,
                  bool no_telemetry) {
    Config cfg = load_or_default(args);
    if (workers_set) cfg.workers = workers;

    BatchOptions opt;
    opt.out_dir = resolve_out(args, cfg);
    opt.workers = cfg.workers;
    opt.telemetry = !no_telemetry;
    opt.plot_data = plots;
    const BatchResult res = run_batch(cfg, opt);

    std::cout << res.rows.size() << " trials -> " << res.csv_path << '\n';
    std::cout << "failures: " << res.failures << '\n';
    for (const auto& [name, stats] : res.summary["effectors"].items())
        if (stats["coverage_total"].contains("mean"))
            std::cout << name << " mean total coverage: "
                      << stats["coverage_total"]["mean"].get<double>() << "%\n";
    std::cout << "summary: " << res.summary_path << '\n';
    return res.failures > 0 ? 1 : 0;
}

int run_report(const CommonArgs& args) {
    const Config cfg = load_or_default(args);
    const fs::path out = resolve_out(args, cfg);
    const auto rows = load_rows((out / "batch.csv").string());
    const nlohmann::json summary = aggregate_rows(rows);
    const fs::path path = out / "summary.json";
    std::ofstream sj(path);
    sj << summary.dump(2) << '\n';
    std::cout << "re-aggregated " << rows.size() << " rows -> " << path.string() << '\n';
    return 0;
}

int run_oracle(const CommonArgs& args, long samples, bool samples_set, double tolerance) {
    Config cfg = load_or_default(args);
    if (samples_set) cfg.mc_samples = samples;
    cfg.validate();

    const EffectorKind kind = single_kind(cfg);
    const SimResult res = run_trial(make_setup(cfg, kind, cfg.build(), cfg.seed));
    if (res.failed()) {
        std::cout << "trial failed: " << res.message << '\n';
        return 1;
    }
    if (!res.coverage_defined) {
        std::cout << "coverage undefined; nothing to cross-check\n";
        return 1;
    }
    const OracleReport rep =
        mc_coverage(res.before, res.after, splitmix64(cfg.seed), cfg.mc_samples);
    const double delta = std::abs(rep.total_pct - res.coverage.total_pct);
    std::cout << "grid:    " << res.coverage.total_pct << "%\n";
    std::cout << "sampled: " << rep.total_pct << "% (" << rep.samples << " draws)\n";
    std::cout << "delta:   " << delta << " pp (tolerance " << tolerance << ")\n";
    return delta <= tolerance ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capacitive-servo limb cleaning simulator"};
    app.require_subcommand(1);

    CommonArgs sim_args, batch_args, report_args, oracle_args;

    CLI::App* sim = app.add_subcommand("simulate", "run one trial and print its result");
    add_common(sim, sim_args, true);
    bool sim_no_telemetry = false;
    sim->add_flag("--no-telemetry", sim_no_telemetry, "skip writing the telemetry file");

    CLI::App* batch = app.add_subcommand("batch", "run the paired sweep and write reports");
    add_common(batch, batch_args, true);
    int workers = 0;
    auto* workers_opt =
        batch->add_option("-w,--workers", workers, "parallel trial workers")->check(CLI::PositiveNumber);
    bool plots = false;
    batch->add_flag("--plots", plots, "also write plot-ready scatter and bar data");
    bool batch_no_telemetry = false;
    batch->add_flag("--no-telemetry", batch_no_telemetry, "skip per-trial telemetry files");

    CLI::App* report = app.add_subcommand("report", "re-aggregate an existing batch.csv");
    add_common(report, report_args, false);

    CLI::App* oracle = app.add_subcommand("oracle", "cross-check grid coverage by sampling");
    add_common(oracle, oracle_args, true);
    long samples = 0;
    auto* samples_opt =
        oracle->add_option("-n,--samples", samples, "Monte Carlo draws")->check(CLI::PositiveNumber);
    double tolerance = 1.0;
    oracle->add_option("-t,--tolerance", tolerance, "max |grid - sampled| in percentage points");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_simulate(sim_args, sim_no_telemetry);
        if (batch->parsed())
            return run_batch_cmd(batch_args, workers, workers_opt->count() > 0, plots,
                                 batch_no_telemetry);
        if (report->parsed()) return run_report(report_args);
        if (oracle->parsed())
            return run_oracle(oracle_args, samples, samples_opt->count() > 0, tolerance);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
