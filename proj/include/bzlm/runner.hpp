#pragma once

#include <array>
#include <functional>
#include <string>

#include "bzlm/analysis.hpp"
#include "bzlm/config.hpp"

namespace bzlm {

struct FrameSummary {
    double t_s = 0.0;
    std::vector<double> mean_u;
    std::vector<double> mean_v;
    std::vector<double> excited_fraction;
};

struct RunLog {
    nlohmann::json config;  // resolved snapshot, replayable
    std::vector<MarbleSpec> marbles;
    ContactGraph graph;
    std::vector<FrameSummary> frames;
    std::vector<OscillationEvent> oscillations;
    std::vector<ZoneArrival> arrivals;
    std::vector<TransferEvent> transfers;
    std::vector<Pathway> pathways;
    ExperimentStatistics stats;
};

struct RunOptions {
    Exec exec = Exec::automatic;
    std::string frames_dir;  // empty -> no raster frames even if configured
};

/// Build marbles and contact graph, run the coupled time loop, detect
/// events, compute statistics. Identical (config, seed) gives an identical
/// RunLog regardless of thread count.
RunLog run_scenario(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Truth table of the T-junction gate at one illumination: entry k is
/// whether the output marble fires for inputs (k&1, k>>1).
std::array<bool, 4> gate_truth_table(const ExperimentConfig& cfg, double phi,
                                     const RunOptions& opt = {});

struct GateReport {
    double phi_low = 0.0;
    double phi_high = 0.0;
    std::array<bool, 4> table_low{};
    std::array<bool, 4> table_high{};
    bool differ = false;
};

/// Runs all four input combinations at cfg.gate.phi_low and phi_high.
GateReport gate_demo(const ExperimentConfig& cfg, const RunOptions& opt = {});

/// Re-match transfers on a finished log with a different attribution window
/// (no re-simulation; used by the window sensitivity sweep).
TransferDetection redetect_transfers(const RunLog& log, double window_s);

}  // namespace bzlm
