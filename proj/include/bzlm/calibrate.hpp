#pragma once

#include <map>
#include <string>
#include <vector>

#include "bzlm/runner.hpp"

namespace bzlm {

/// Fitting target. Supported metrics:
///   t_full_mean_s      mean full-crossing time over completed waves
///   transfer_fraction  transfers / oscillations
///   oscillation_count  total oscillations
struct CalibrationTarget {
    std::string metric;
    double value = 0.0;
    double rel_tol = 0.05;
};

/// Free parameter with search bounds. Names: time_unit_s, diffusion_u,
/// k_med, sigma, gate_prob.
struct FreeParam {
    std::string name;
    double lo = 0.0;
    double hi = 0.0;
};

struct CalibrationOptions {
    std::vector<CalibrationTarget> targets;
    std::vector<FreeParam> free_params;
    int budget_evals = 40;    // scenario-ensemble evaluations
    int seeds_per_eval = 5;   // runs averaged per evaluation
    RunOptions run;
};

struct CalibrationResult {
    std::map<std::string, double> params;   // fitted values
    std::vector<double> residuals;          // signed relative, per target
    std::vector<double> metric_values;      // ensemble means at the optimum
    double loss = 0.0;                      // sum of squared relative residuals
    bool converged = false;                 // every |residual| <= rel_tol
    int evaluations = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> best_loss_history;  // monotone non-increasing
    ExperimentConfig fitted;                // config with fitted params applied
};

double metric_from_log(const RunLog& log, const std::string& metric);

/// Run one config at several seeds, distributing the runs over the worker
/// pool (each run itself stays on one thread). Results are in seed order.
std::vector<RunLog> run_ensemble(const ExperimentConfig& cfg,
                                 const std::vector<std::uint64_t>& seeds,
                                 const RunOptions& opt = {});

/// Coordinate-wise golden-section minimisation of the squared relative
/// residuals over seeded ensemble means. Returns immediately (no parameter
/// change) when the starting point already meets every tolerance; otherwise
/// searches until converged or the evaluation budget runs out.
CalibrationResult calibrate(const ExperimentConfig& cfg,
                            const CalibrationOptions& opt);

}  // namespace bzlm
