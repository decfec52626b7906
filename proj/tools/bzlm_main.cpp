// Command-line front end: run scenarios, calibrate parameters against
// measured targets, and exercise the polymorphic gate demo.

#include <omp.h>

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bzlm/calibrate.hpp"
#include "bzlm/io.hpp"

using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::int64_t seed = -1;
    double frames_every = -1.0;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("config", args.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--frames-every", args.frames_every,
                    "write a PGM frame every N seconds (0 disables)");
    cmd->add_option("--threads", args.threads, "OpenMP worker threads");
}

bzlm::ExperimentConfig load(const CommonArgs& args) {
    bzlm::ExperimentConfig cfg = bzlm::load_config(args.config_path);
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    if (args.frames_every >= 0.0) cfg.output.frames_every_s = args.frames_every;
    if (args.threads > 0) omp_set_num_threads(args.threads);
    return cfg;
}

void print_stats(const bzlm::RunLog& log) {
    const auto& s = log.stats;
    std::printf("marbles: %zu, contacts: %zu\n", log.marbles.size(),
                log.graph.edges.size());
    std::printf("oscillations: %d, transfers: %d", s.total_oscillations,
                s.total_transfers);
    if (s.transfer_fraction)
        std::printf(" (fraction %.3f)", *s.transfer_fraction);
    std::printf("\n");
    std::printf("longest pathway: %d marbles, near misses: %d\n",
                s.longest_pathway_marbles, s.near_misses);
}

int cmd_run(const CommonArgs& args) {
    const bzlm::ExperimentConfig cfg = load(args);
    bzlm::RunOptions opt;
    if (cfg.output.frames_every_s > 0.0) {
        std::filesystem::create_directories(args.out_dir);
        opt.frames_dir = args.out_dir;
    }
    const bzlm::RunLog log = bzlm::run_scenario(cfg, opt);
    const bzlm::OutputFiles files = bzlm::emit_outputs(log, args.out_dir);
    print_stats(log);
    std::printf("wrote %s\n", files.statistics_csv.c_str());
    std::printf("wrote %s\n", files.events_csv.c_str());
    std::printf("wrote %s\n", files.pathways_csv.c_str());
    std::printf("wrote %s\n", files.manifest.c_str());
    return 0;
}

int cmd_calibrate(const CommonArgs& args, const std::string& targets_path) {
    const bzlm::ExperimentConfig cfg = load(args);

    std::ifstream in(targets_path);
    if (!in) throw bzlm::ConfigError("cannot open targets file " + targets_path);
    json tj;
    in >> tj;
    bzlm::CalibrationOptions opt;
    for (const json& t : tj.at("targets")) {
        bzlm::CalibrationTarget target;
        target.metric = t.at("metric").get<std::string>();
        target.value = t.at("value").get<double>();
        target.rel_tol = t.value("rel_tol", 0.05);
        opt.targets.push_back(target);
    }
    for (const json& p : tj.at("free_params")) {
        bzlm::FreeParam fp;
        fp.name = p.at("name").get<std::string>();
        fp.lo = p.at("lo").get<double>();
        fp.hi = p.at("hi").get<double>();
        opt.free_params.push_back(fp);
    }
    opt.budget_evals = tj.value("budget_evals", 40);
    opt.seeds_per_eval = tj.value("seeds_per_eval", 5);

    const bzlm::CalibrationResult res = bzlm::calibrate(cfg, opt);

    json report;
    report["converged"] = res.converged;
    report["loss"] = res.loss;
    report["evaluations"] = res.evaluations;
    report["params"] = res.params;
    report["seeds"] = res.seeds;
    json rt = json::array();
    for (std::size_t t = 0; t < opt.targets.size(); ++t)
        rt.push_back({{"metric", opt.targets[t].metric},
                      {"target", opt.targets[t].value},
                      {"achieved", res.metric_values[t]},
                      {"relative_residual", res.residuals[t]}});
    report["targets"] = rt;
    report["best_loss_history"] = res.best_loss_history;

    std::filesystem::create_directories(args.out_dir);
    const std::string path =
        (std::filesystem::path(args.out_dir) / "calibration.json").string();
    std::ofstream out(path);
    out << report.dump(2) << "\n";

    std::printf("%s after %d evaluations, loss %.6g\n",
                res.converged ? "converged" : "NOT converged", res.evaluations,
                res.loss);
    for (const auto& [name, value] : res.params)
        std::printf("  %s = %.6g\n", name.c_str(), value);
    for (const auto& t : rt)
        std::printf("  %s: target %.4g achieved %.4g (residual %+.2f%%)\n",
                    t["metric"].get<std::string>().c_str(),
                    t["target"].get<double>(), t["achieved"].get<double>(),
                    100.0 * t["relative_residual"].get<double>());
    std::printf("wrote %s\n", path.c_str());
    return res.converged ? 0 : 3;
}

int cmd_gate(const CommonArgs& args) {
    const bzlm::ExperimentConfig cfg = load(args);
    const bzlm::GateReport r = bzlm::gate_demo(cfg);
    auto row = [](const std::array<bool, 4>& t, double phi, const char* tag) {
        std::printf("phi_%s = %.4g:  (0,0)->%d  (1,0)->%d  (0,1)->%d  (1,1)->%d\n",
                    tag, phi, t[0] ? 1 : 0, t[1] ? 1 : 0, t[2] ? 1 : 0,
                    t[3] ? 1 : 0);
    };
    row(r.table_low, r.phi_low, "low");
    row(r.table_high, r.phi_high, "high");
    std::printf("tables %s\n", r.differ ? "DIFFER" : "identical");

    std::filesystem::create_directories(args.out_dir);
    const std::string path =
        (std::filesystem::path(args.out_dir) / "gate_report.json").string();
    json report;
    report["phi_low"] = r.phi_low;
    report["phi_high"] = r.phi_high;
    report["table_low"] = r.table_low;
    report["table_high"] = r.table_high;
    report["differ"] = r.differ;
    std::ofstream out(path);
    out << report.dump(2) << "\n";
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Belousov-Zhabotinsky liquid-marble array simulator"};
    app.require_subcommand(1);

    CommonArgs run_args, cal_args, gate_args;
    std::string targets_path;

    CLI::App* run = app.add_subcommand("run", "run one scenario");
    add_common(run, run_args);

    CLI::App* cal =
        app.add_subcommand("calibrate", "fit free parameters to targets");
    add_common(cal, cal_args);
    cal->add_option("--targets", targets_path, "targets file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* gate = app.add_subcommand("gate", "run the polymorphic gate demo");
    add_common(gate, gate_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (cal->parsed()) return cmd_calibrate(cal_args, targets_path);
        if (gate->parsed()) return cmd_gate(gate_args);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
