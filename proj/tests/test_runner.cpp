#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bzlm/calibrate.hpp"
#include "bzlm/io.hpp"

using namespace bzlm;
namespace fs = std::filesystem;

#ifndef BZLM_CONFIG_DIR
#define BZLM_CONFIG_DIR "configs"
#endif

namespace {

ExperimentConfig single_short() {
    ExperimentConfig cfg;
    cfg.scenario = ScenarioKind::single;
    cfg.seed = 5;
    cfg.duration_s = 60.0;
    cfg.volume_ul = 50.0;
    cfg.cells_per_diameter = 32;
    cfg.kinetics.time_unit_s = 8.0;
    cfg.kinetics.diffusion_u = 0.0194;
    cfg.solver_dt = 4e-4;
    cfg.detection.sample_every_s = 0.25;
    InitiationSpec init;
    init.time_s = 5.0;
    init.radius_frac = 0.0;
    init.radius_mm = 0.25;
    init.amplitude = 0.8;
    cfg.initiations.push_back(init);
    return cfg;
}

ExperimentConfig disordered_small(double gate_prob) {
    ExperimentConfig cfg;
    cfg.scenario = ScenarioKind::disordered;
    cfg.seed = 30;
    cfg.duration_s = 120.0;
    cfg.volume_ul = 50.0;
    cfg.cells_per_diameter = 24;
    cfg.kinetics.time_unit_s = 8.0;
    cfg.kinetics.diffusion_u = 0.0194;
    cfg.solver_dt = 4e-4;
    cfg.placement.count = 6;
    cfg.placement.dish_radius_mm = 8.7;
    cfg.placement.min_gap_mm = -0.15;
    cfg.placement.max_attempts = 400000;
    cfg.coupling.k_med = 60.0;
    cfg.coupling.sigma = 0.3;
    cfg.coupling.gate_prob = gate_prob;
    cfg.coupling.contact_tolerance_mm = 0.8;
    cfg.coupling.contact_zone_mm = 0.55;
    cfg.detection.sample_every_s = 0.5;
    cfg.pacemakers.mode = PacemakerConfig::Mode::seeded;
    cfg.pacemakers.patch_radius_mm = 0.5;
    cfg.pacemakers.phi_min = 0.0005;
    cfg.pacemakers.phi_max = 0.003;
    cfg.pacemakers.max_centre_frac = 0.5;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("all committed presets parse and validate") {
    for (const char* name :
         {"single_50ul", "single_100ul", "disordered_14", "disordered_15",
          "ordered_4x4", "gate_demo"}) {
        const std::string path =
            std::string(BZLM_CONFIG_DIR) + "/" + name + ".json";
        CAPTURE(path);
        CHECK_NOTHROW(load_config(path));
    }
}

TEST_CASE("config snapshots replay to the same config") {
    const ExperimentConfig cfg = load_config(std::string(BZLM_CONFIG_DIR) +
                                             "/disordered_14.json");
    const ExperimentConfig back = parse_config(cfg.to_json());
    CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("config errors carry context") {
    nlohmann::json j;
    j["scenario"] = "single";
    j["duration_s"] = 10.0;
    j["marble"] = {{"volume_ul", 50.0}};
    CHECK_THROWS_WITH_AS(parse_config(j),
                         doctest::Contains("seed is required"), ConfigError);
    j["seed"] = 1;
    CHECK_NOTHROW(parse_config(j));
    j["scenario"] = "hexagonal";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("one stimulus in an excitable marble is exactly one oscillation") {
    const RunLog log = run_scenario(single_short());
    CHECK(log.stats.total_oscillations == 1);
    CHECK(log.transfers.empty());
    CHECK(log.graph.edges.empty());
    REQUIRE(log.oscillations.size() == 1);
    CHECK(log.oscillations[0].onset_s >= 5.0);
    const auto ct = measure_crossing(log.oscillations[0]);
    REQUIRE(ct.has_value());
    CHECK(ct->t_full_s > 0.0);
}

TEST_CASE("serial and parallel runs are identical") {
    RunOptions ser, par;
    ser.exec = Exec::serial;
    par.exec = Exec::parallel;
    const RunLog a = run_scenario(disordered_small(0.5), ser);
    const RunLog b = run_scenario(disordered_small(0.5), par);
    REQUIRE(a.oscillations.size() == b.oscillations.size());
    for (std::size_t i = 0; i < a.oscillations.size(); ++i) {
        CHECK(a.oscillations[i].onset_s == b.oscillations[i].onset_s);
        CHECK(a.oscillations[i].origin_cell == b.oscillations[i].origin_cell);
    }
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i)
        CHECK(a.frames[i].mean_u == b.frames[i].mean_u);
    CHECK(a.transfers.size() == b.transfers.size());
}

TEST_CASE("closed gates mean zero transfers on any seed") {
    for (const std::uint64_t seed : {30ull, 31ull, 32ull}) {
        ExperimentConfig cfg = disordered_small(0.0);
        cfg.seed = seed;
        const RunLog log = run_scenario(cfg);
        CHECK(log.stats.total_oscillations > 0);
        CHECK(log.transfers.empty());
        CHECK(log.pathways.empty());
    }
}

TEST_CASE("byte-identical outputs for a fixed config and seed") {
    const fs::path base = fs::temp_directory_path() / "bzlm_test_determinism";
    fs::remove_all(base);
    const RunLog a = run_scenario(disordered_small(0.4));
    const RunLog b = run_scenario(disordered_small(0.4));
    const OutputFiles fa = emit_outputs(a, (base / "a").string());
    const OutputFiles fb = emit_outputs(b, (base / "b").string());
    CHECK(slurp(fa.statistics_csv) == slurp(fb.statistics_csv));
    CHECK(slurp(fa.events_csv) == slurp(fb.events_csv));
    CHECK(slurp(fa.pathways_csv) == slurp(fb.pathways_csv));
    CHECK(slurp(fa.manifest) == slurp(fb.manifest));
    fs::remove_all(base);
}

TEST_CASE("an empty run still writes valid headers") {
    ExperimentConfig cfg = single_short();
    cfg.duration_s = 1e-4;  // shorter than one step
    cfg.initiations.clear();
    const RunLog log = run_scenario(cfg);
    const fs::path dir = fs::temp_directory_path() / "bzlm_test_empty";
    fs::remove_all(dir);
    const OutputFiles files = emit_outputs(log, dir.string());
    CHECK(slurp(files.statistics_csv) ==
          "marble_id,x_mm,y_mm,diameter_mm,oscillations\n0,0.000000,0.000000,"
          "4.570781,0\n");
    CHECK(slurp(files.events_csv) ==
          "kind,marble,wave,source_marble,source_wave,edge,time_s,half1_s,"
          "half2_s,origin_x_mm,origin_y_mm\n");
    fs::remove_all(dir);
}

TEST_CASE("statistics CSV has one row per marble") {
    const RunLog log = run_scenario(disordered_small(0.2));
    const fs::path dir = fs::temp_directory_path() / "bzlm_test_rows";
    fs::remove_all(dir);
    const OutputFiles files = emit_outputs(log, dir.string());
    const std::string csv = slurp(files.statistics_csv);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);  // header + 6 marbles
    fs::remove_all(dir);
}

TEST_CASE("a resting field renders at the rest gray level") {
    ExperimentConfig cfg = single_short();
    cfg.initiations.clear();
    cfg.duration_s = 2.0;
    cfg.output.frames_every_s = 1.0;
    const fs::path dir = fs::temp_directory_path() / "bzlm_test_frames";
    fs::remove_all(dir);
    fs::create_directories(dir);
    RunOptions opt;
    opt.frames_dir = dir.string();
    run_scenario(cfg, opt);

    const std::string pgm = slurp((dir / "frame_000000.pgm").string());
    REQUIRE(pgm.substr(0, 3) == "P5\n");
    const std::size_t header_end = pgm.find("255\n") + 4;
    for (std::size_t i = header_end; i < pgm.size(); ++i)
        CHECK(static_cast<unsigned char>(pgm[i]) <= 1);
    fs::remove_all(dir);
}

TEST_CASE("config snapshot replay reproduces the statistics") {
    const ExperimentConfig cfg = disordered_small(0.4);
    const RunLog first = run_scenario(cfg);
    const ExperimentConfig replay = parse_config(first.config);
    const RunLog second = run_scenario(replay);
    CHECK(first.stats.total_oscillations == second.stats.total_oscillations);
    CHECK(first.stats.total_transfers == second.stats.total_transfers);
    CHECK(first.stats.per_marble_oscillations ==
          second.stats.per_marble_oscillations);
}

TEST_CASE("transfers reference real edges and real waves") {
    const RunLog log = run_scenario(disordered_small(0.8));
    for (const auto& t : log.transfers) {
        REQUIRE(t.edge >= 0);
        REQUIRE(t.edge < static_cast<int>(log.graph.edges.size()));
        const auto& e = log.graph.edges[t.edge];
        const bool matches = (t.source_marble == e.i && t.target_marble == e.j) ||
                             (t.source_marble == e.j && t.target_marble == e.i);
        CHECK(matches);
        bool target_found = false;
        for (const auto& ev : log.oscillations)
            if (ev.marble == t.target_marble && ev.wave_id == t.target_wave &&
                ev.onset_s == t.time_s)
                target_found = true;
        CHECK(target_found);
    }
    if (log.stats.transfer_fraction) {
        CHECK(*log.stats.transfer_fraction >= 0.0);
        CHECK(*log.stats.transfer_fraction <= 1.0);
    }
}

TEST_CASE("calibration returns immediately when targets are already met") {
    const ExperimentConfig cfg = single_short();
    const RunLog log = run_scenario(cfg);
    CalibrationOptions opt;
    opt.targets.push_back({"oscillation_count",
                           static_cast<double>(log.stats.total_oscillations),
                           0.25});
    opt.free_params.push_back({"time_unit_s", 4.0, 16.0});
    opt.seeds_per_eval = 2;
    const CalibrationResult res = calibrate(cfg, opt);
    CHECK(res.converged);
    CHECK(res.evaluations == 1);
    CHECK(res.params.at("time_unit_s") == cfg.kinetics.time_unit_s);
    CHECK(res.best_loss_history.size() == 1);
}

TEST_CASE("an infeasible target ends non-converged within budget") {
    CalibrationOptions opt;
    opt.targets.push_back({"transfer_fraction", 1.5, 0.05});  // impossible
    opt.free_params.push_back({"gate_prob", 0.0, 1.0});
    opt.budget_evals = 5;
    opt.seeds_per_eval = 1;
    const CalibrationResult res = calibrate(disordered_small(0.2), opt);
    CHECK_FALSE(res.converged);
    CHECK(res.evaluations <= 7);  // initial + golden-section probes may finish the bracket
    for (std::size_t i = 1; i < res.best_loss_history.size(); ++i)
        CHECK(res.best_loss_history[i] <= res.best_loss_history[i - 1]);
}

TEST_CASE("window re-detection is consistent with the run") {
    const RunLog log = run_scenario(disordered_small(0.6));
    const ExperimentConfig cfg = parse_config(log.config);
    const TransferDetection same =
        redetect_transfers(log, cfg.detection.transfer_window_s);
    CHECK(same.transfers.size() == log.transfers.size());
    const TransferDetection tiny = redetect_transfers(log, 1e-3);
    CHECK(tiny.transfers.empty());
}

TEST_CASE("manifest carries the config hash and seed") {
    const ExperimentConfig cfg = single_short();
    const RunLog log = run_scenario(cfg);
    const fs::path dir = fs::temp_directory_path() / "bzlm_test_manifest";
    fs::remove_all(dir);
    const OutputFiles files = emit_outputs(log, dir.string());
    const std::string manifest = slurp(files.manifest);
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    CHECK(manifest.find(std::string("config_hash: ") + hash) != std::string::npos);
    CHECK(manifest.find("seed: 5") != std::string::npos);
    fs::remove_all(dir);
}
