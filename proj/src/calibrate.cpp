#include "bzlm/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace bzlm {

std::vector<RunLog> run_ensemble(const ExperimentConfig& cfg,
                                 const std::vector<std::uint64_t>& seeds,
                                 const RunOptions& opt) {
    const int n = static_cast<int>(seeds.size());
    std::vector<RunLog> logs(n);
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) {
        try {
            ExperimentConfig c = cfg;
            c.seed = seeds[i];
            RunOptions o = opt;
            o.exec = Exec::serial;  // parallelism is across the ensemble
            logs[i] = run_scenario(c, o);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return logs;
}

double metric_from_log(const RunLog& log, const std::string& metric) {
    if (metric == "t_full_mean_s") {
        double sum = 0.0;
        int n = 0;
        for (const auto& ev : log.oscillations) {
            const auto ct = measure_crossing(ev);
            if (ct && !ct->degenerate) {
                sum += ct->t_full_s;
                ++n;
            }
        }
        return n > 0 ? sum / n : std::nan("");
    }
    if (metric == "transfer_fraction") {
        return log.stats.transfer_fraction ? *log.stats.transfer_fraction
                                           : std::nan("");
    }
    if (metric == "oscillation_count")
        return static_cast<double>(log.stats.total_oscillations);
    throw ConfigError("calibrate: unknown metric '" + metric + "'");
}

namespace {

void apply_param(ExperimentConfig& cfg, const std::string& name, double value) {
    if (name == "time_unit_s")
        cfg.kinetics.time_unit_s = value;
    else if (name == "diffusion_u")
        cfg.kinetics.diffusion_u = value;
    else if (name == "k_med")
        cfg.coupling.k_med = value;
    else if (name == "sigma")
        cfg.coupling.sigma = value;
    else if (name == "gate_prob")
        cfg.coupling.gate_prob = value;
    else
        throw ConfigError("calibrate: unknown free parameter '" + name + "'");
}

struct Evaluation {
    std::vector<double> metrics;    // ensemble mean per target
    std::vector<double> residuals;  // signed relative
    double loss = 0.0;
    bool converged = false;
};

}  // namespace

CalibrationResult calibrate(const ExperimentConfig& cfg,
                            const CalibrationOptions& opt) {
    if (opt.targets.empty()) throw ConfigError("calibrate: no targets");
    if (opt.free_params.empty()) throw ConfigError("calibrate: no free parameters");
    for (const auto& fp : opt.free_params)
        if (!(fp.lo < fp.hi))
            throw ConfigError("calibrate: bad bounds for '" + fp.name + "'");

    CalibrationResult res;
    for (int s = 0; s < opt.seeds_per_eval; ++s)
        res.seeds.push_back(cfg.seed + static_cast<std::uint64_t>(s));

    auto evaluate = [&](const std::map<std::string, double>& params) {
        ExperimentConfig c = cfg;
        for (const auto& [name, value] : params) apply_param(c, name, value);
        std::vector<double> sums(opt.targets.size(), 0.0);
        std::vector<int> counts(opt.targets.size(), 0);
        for (const RunLog& log : run_ensemble(c, res.seeds, opt.run)) {
            for (std::size_t t = 0; t < opt.targets.size(); ++t) {
                const double m = metric_from_log(log, opt.targets[t].metric);
                if (std::isfinite(m)) {
                    sums[t] += m;
                    ++counts[t];
                }
            }
        }
        ++res.evaluations;
        Evaluation ev;
        ev.metrics.resize(opt.targets.size());
        ev.residuals.resize(opt.targets.size());
        ev.converged = true;
        for (std::size_t t = 0; t < opt.targets.size(); ++t) {
            ev.metrics[t] = counts[t] > 0 ? sums[t] / counts[t] : std::nan("");
            const double rel =
                std::isfinite(ev.metrics[t])
                    ? (ev.metrics[t] - opt.targets[t].value) / opt.targets[t].value
                    : 1e6;  // metric undefined: heavily penalised
            ev.residuals[t] = rel;
            ev.loss += rel * rel;
            if (std::abs(rel) > opt.targets[t].rel_tol) ev.converged = false;
        }
        return ev;
    };

    std::map<std::string, double> best_params;
    for (const auto& fp : opt.free_params) {
        double v = 0.0;
        if (fp.name == "time_unit_s") v = cfg.kinetics.time_unit_s;
        else if (fp.name == "diffusion_u") v = cfg.kinetics.diffusion_u;
        else if (fp.name == "k_med") v = cfg.coupling.k_med;
        else if (fp.name == "sigma") v = cfg.coupling.sigma;
        else if (fp.name == "gate_prob") v = cfg.coupling.gate_prob;
        else throw ConfigError("calibrate: unknown free parameter '" + fp.name + "'");
        best_params[fp.name] = std::clamp(v, fp.lo, fp.hi);
    }

    Evaluation best = evaluate(best_params);
    res.best_loss_history.push_back(best.loss);

    // already satisfied: no parameter changes at all
    if (!best.converged) {
        const double gold = (std::sqrt(5.0) - 1.0) / 2.0;
        bool done = false;
        for (int pass = 0; pass < 4 && !done; ++pass) {
            for (const auto& fp : opt.free_params) {
                if (done) break;
                double a = fp.lo, b = fp.hi;
                auto probe = [&](double x) {
                    auto params = best_params;
                    params[fp.name] = x;
                    Evaluation ev = evaluate(params);
                    if (ev.loss < best.loss) {
                        best = ev;
                        best_params = params;
                    }
                    res.best_loss_history.push_back(best.loss);
                    return ev;
                };
                double x1 = b - gold * (b - a);
                double x2 = a + gold * (b - a);
                Evaluation e1 = probe(x1);
                Evaluation e2 = probe(x2);
                while (!best.converged && res.evaluations < opt.budget_evals &&
                       (b - a) > 0.01 * (fp.hi - fp.lo)) {
                    if (e1.loss <= e2.loss) {
                        b = x2;
                        x2 = x1;
                        e2 = e1;
                        x1 = b - gold * (b - a);
                        e1 = probe(x1);
                    } else {
                        a = x1;
                        x1 = x2;
                        e1 = e2;
                        x2 = a + gold * (b - a);
                        e2 = probe(x2);
                    }
                }
                if (best.converged || res.evaluations >= opt.budget_evals)
                    done = true;
            }
        }
    }

    res.params = best_params;
    res.residuals = best.residuals;
    res.metric_values = best.metrics;
    res.loss = best.loss;
    res.converged = best.converged;
    res.fitted = cfg;
    for (const auto& [name, value] : best_params)
        apply_param(res.fitted, name, value);
    return res;
}

}  // namespace bzlm
