#include "bzlm/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "bzlm/io.hpp"

namespace bzlm {

namespace {

constexpr std::uint64_t kSeedSaltContacts = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kSeedSaltGates = 0xc2b2ae3d27d4eb4full;
constexpr std::uint64_t kSeedSaltPacemakers = 0x165667b19e3779f9ull;

std::vector<MarbleSpec> build_marbles(const ExperimentConfig& cfg) {
    const MarbleSpec tmpl = cfg.marble_template();
    switch (cfg.scenario) {
        case ScenarioKind::single: {
            MarbleSpec m = tmpl;
            m.position_mm = cfg.placement.position_mm;
            return {m};
        }
        case ScenarioKind::ordered: {
            const double pitch = cfg.placement.pitch_mm > 0.0
                                     ? cfg.placement.pitch_mm
                                     : tmpl.diameter_mm();
            return place_ordered(cfg.placement.rows, cfg.placement.cols, pitch,
                                 tmpl);
        }
        case ScenarioKind::disordered: {
            PlacementConfig pc;
            pc.count = cfg.placement.count;
            pc.dish_radius_mm = cfg.placement.dish_radius_mm;
            pc.min_gap_mm = cfg.placement.min_gap_mm;
            pc.max_attempts = cfg.placement.max_attempts;
            pc.seed = cfg.seed;
            return place_disordered(pc, tmpl);
        }
        case ScenarioKind::gate: {
            // T-junction: two inputs flank a middle marble, output below it.
            const double p = tmpl.diameter_mm();
            std::vector<MarbleSpec> ms(4, tmpl);
            ms[0].position_mm = {-p, 0.0};  // input A
            ms[1].position_mm = {0.0, 0.0};  // junction
            ms[2].position_mm = {p, 0.0};   // input B
            ms[3].position_mm = {0.0, p};   // output
            return ms;
        }
    }
    throw ConfigError("run: unknown scenario");
}

struct ScheduledInitiation {
    double time_s;
    int marble;
    Vec2 site_mm;
    double radius_mm;
    double amplitude;
};

std::vector<ScheduledInitiation> expand_initiations(
    const ExperimentConfig& cfg, const std::vector<MarbleSpec>& marbles,
    const std::vector<DiscGrid>& grids) {
    std::vector<ScheduledInitiation> out;
    for (const auto& spec : cfg.initiations) {
        if (spec.marble >= static_cast<int>(marbles.size()))
            throw ConfigError("config: initiation marble index out of range");
        const DiscGrid& g = grids[spec.marble];
        const double a = spec.angle_deg * M_PI / 180.0;
        Vec2 site = marbles[spec.marble].position_mm +
                    (spec.radius_frac * g.radius_mm) *
                        Vec2{std::cos(a), std::sin(a)};
        if (g.cell_at(site) < 0) site = g.pos_mm[g.nearest_cell(site)];
        for (int rep = 0; rep < spec.count; ++rep)
            out.push_back({spec.time_s + rep * spec.repeat_every_s, spec.marble,
                           site, spec.radius_mm, spec.amplitude});
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.time_s < b.time_s; });
    return out;
}

}  // namespace

RunLog run_scenario(const ExperimentConfig& cfg, const RunOptions& opt) {
    cfg.validate();
    RunLog log;
    log.config = cfg.to_json();
    log.marbles = build_marbles(cfg);
    const int n_marbles = static_cast<int>(log.marbles.size());

    std::vector<DiscGrid> grids;
    grids.reserve(n_marbles);
    for (const auto& m : log.marbles) grids.push_back(build_disc_mask(m));

    log.graph = contact_graph(log.marbles, cfg.coupling.contact_tolerance_mm,
                              cfg.coupling.k_med, cfg.coupling.sigma,
                              cfg.coupling.gate_prob,
                              cfg.seed ^ kSeedSaltContacts);
    const ContactZones zones =
        contact_zones(log.graph, grids, cfg.coupling.contact_zone_mm);
    const double attr_mm = cfg.detection.attribution_zone_mm > 0.0
                               ? cfg.detection.attribution_zone_mm
                               : cfg.coupling.contact_zone_mm;
    const ContactZones attr_zones = contact_zones(log.graph, grids, attr_mm);
    const int n_edges = static_cast<int>(log.graph.edges.size());

    // flat cell arrays across all marbles; stencil links stay marble-local
    std::vector<int> offset(n_marbles + 1, 0);
    for (int m = 0; m < n_marbles; ++m) offset[m + 1] = offset[m] + grids[m].n();
    const int total = offset[n_marbles];

    const PulseStats ps = pulse_stats(cfg.kinetics);
    std::vector<double> u(total, ps.u_rest), v(total, ps.v_rest);
    std::vector<double> u2(total), v2(total), flux(total, 0.0);
    std::vector<double> phi(total, cfg.kinetics.phi);
    std::vector<std::array<std::int32_t, 4>> nbr(total);
    for (int m = 0; m < n_marbles; ++m)
        for (int c = 0; c < grids[m].n(); ++c)
            for (int d = 0; d < 4; ++d)
                nbr[offset[m] + c][d] = grids[m].nbr[c][d] + offset[m];

    // pacemaker patches: lowered phi inside a small disc per marble, switched
    // on at a per-marble start time so the array begins out of phase
    struct PendingPatch {
        double start_s;
        double phi;
        std::vector<std::int32_t> cells;  // global indices
    };
    std::vector<PendingPatch> patches;
    auto collect_patch = [&](int m, Vec2 centre, double phi_pm, double start_s) {
        PendingPatch p;
        p.start_s = start_s;
        p.phi = phi_pm;
        const DiscGrid& g = grids[m];
        const double r2 =
            cfg.pacemakers.patch_radius_mm * cfg.pacemakers.patch_radius_mm;
        for (int c = 0; c < g.n(); ++c) {
            const Vec2 d = g.pos_mm[c] - centre;
            if (dot(d, d) <= r2) p.cells.push_back(c + offset[m]);
        }
        patches.push_back(std::move(p));
    };
    if (cfg.pacemakers.mode == PacemakerConfig::Mode::seeded) {
        Rng pm_rng(cfg.seed ^ kSeedSaltPacemakers);
        for (int m = 0; m < n_marbles; ++m) {
            const DiscGrid& g = grids[m];
            const Vec2 off =
                pm_rng.in_disc(cfg.pacemakers.max_centre_frac * g.radius_mm);
            const double phi_pm =
                pm_rng.uniform(cfg.pacemakers.phi_min, cfg.pacemakers.phi_max);
            const double start_s =
                cfg.pacemakers.stagger_s > 0.0
                    ? pm_rng.uniform(0.0, cfg.pacemakers.stagger_s)
                    : 0.0;
            collect_patch(m, log.marbles[m].position_mm + off, phi_pm, start_s);
        }
    } else if (cfg.pacemakers.mode == PacemakerConfig::Mode::explicit_list) {
        for (const auto& patch : cfg.pacemakers.patches) {
            if (patch.marble < 0 || patch.marble >= n_marbles)
                throw ConfigError("config: pacemaker patch marble out of range");
            collect_patch(patch.marble,
                          log.marbles[patch.marble].position_mm + patch.offset_mm,
                          patch.phi, 0.0);
        }
    }
    for (const auto& p : patches)
        if (p.start_s <= 0.0)
            for (const auto c : p.cells) phi[c] = p.phi;

    const double h = cfg.grid_h_mm();
    // construction enforces the CFL bound
    const SolverParams sp(cfg.solver_dt, cfg.solver_safety,
                          cfg.kinetics.diffusion_dim(), h);

    const DetectionParams dp = DetectionParams::derive(cfg.kinetics, cfg.detection);
    std::vector<MarbleDetector> detectors;
    detectors.reserve(n_marbles);
    for (int m = 0; m < n_marbles; ++m)
        detectors.emplace_back(m, grids[m], dp);

    // per-edge-side watches and global-index zone cell lists
    std::vector<ZoneWatch> watch_i, watch_j;
    std::vector<std::vector<std::int32_t>> zone_i(n_edges), zone_j(n_edges);
    std::vector<std::int32_t> flux_cells;
    for (int e = 0; e < n_edges; ++e) {
        const ContactEdge& edge = log.graph.edges[e];
        watch_i.emplace_back(e, edge.i, dp.u_zone_on, dp.u_zone_off);
        watch_j.emplace_back(e, edge.j, dp.u_zone_on, dp.u_zone_off);
        for (const auto c : zones.side_i[e]) zone_i[e].push_back(c + offset[edge.i]);
        for (const auto c : zones.side_j[e]) zone_j[e].push_back(c + offset[edge.j]);
        flux_cells.insert(flux_cells.end(), zone_i[e].begin(), zone_i[e].end());
        flux_cells.insert(flux_cells.end(), zone_j[e].begin(), zone_j[e].end());
    }
    std::sort(flux_cells.begin(), flux_cells.end());
    flux_cells.erase(std::unique(flux_cells.begin(), flux_cells.end()),
                     flux_cells.end());

    Rng gate_rng(cfg.seed ^ kSeedSaltGates);

    const auto schedule = expand_initiations(cfg, log.marbles, grids);
    std::size_t next_init = 0;

    const double dt_s = cfg.solver_dt * cfg.kinetics.time_unit_s;
    const long n_steps = std::lround(cfg.duration_s / dt_s);
    const long sample_every =
        std::max(1L, std::lround(cfg.detection.sample_every_s / dt_s));
    const bool frames_on = !opt.frames_dir.empty() && cfg.output.frames_every_s > 0.0;
    const long frame_every =
        frames_on ? std::max(1L, std::lround(cfg.output.frames_every_s / dt_s)) : 0;
    int frame_seq = 0;

    kernel::Args ka;
    ka.nbr = nbr.data();
    ka.n = total;
    ka.dt = cfg.solver_dt;
    ka.diff_over_h2 = cfg.kinetics.diffusion_dim() / (h * h);
    ka.inv_epsilon = 1.0 / cfg.kinetics.epsilon;
    ka.f = cfg.kinetics.f;
    ka.q = cfg.kinetics.q;
    ka.phi0 = cfg.kinetics.phi;
    ka.reactions = true;

    auto sample = [&](double t_s) {
        FrameSummary fs;
        fs.t_s = t_s;
        fs.mean_u.resize(n_marbles);
        fs.mean_v.resize(n_marbles);
        fs.excited_fraction.resize(n_marbles);
        for (int m = 0; m < n_marbles; ++m) {
            const int n = grids[m].n();
            double su = 0.0, sv = 0.0;
            int excited = 0;
            for (int c = offset[m]; c < offset[m + 1]; ++c) {
                su += u[c];
                sv += v[c];
                if (v[c] > dp.v_cell_threshold) ++excited;
            }
            fs.mean_u[m] = su / n;
            fs.mean_v[m] = sv / n;
            fs.excited_fraction[m] = static_cast<double>(excited) / n;
            detectors[m].push(
                t_s, std::span<const double>(u.data() + offset[m], n),
                std::span<const double>(v.data() + offset[m], n));
        }
        log.frames.push_back(std::move(fs));
    };

    for (long step_i = 0; step_i < n_steps; ++step_i) {
        const double t_s = step_i * dt_s;

        for (const auto& p : patches)
            if (p.start_s > t_s - dt_s && p.start_s <= t_s && p.start_s > 0.0)
                for (const auto c : p.cells) phi[c] = p.phi;

        while (next_init < schedule.size() &&
               schedule[next_init].time_s <= t_s) {
            const auto& s = schedule[next_init++];
            const DiscGrid& g = grids[s.marble];
            const double r2 = s.radius_mm * s.radius_mm;
            for (int cc = 0; cc < g.n(); ++cc) {
                const Vec2 d = g.pos_mm[cc] - s.site_mm;
                if (dot(d, d) <= r2) {
                    double& uu = u[offset[s.marble] + cc];
                    uu = std::max(uu, s.amplitude);
                }
            }
        }

        // contact bookkeeping: zone means feed both arrival gating and flux
        for (const auto c : flux_cells) flux[c] = 0.0;
        for (int e = 0; e < n_edges; ++e) {
            ContactEdge& edge = log.graph.edges[e];
            // means first, so an arrival this step opens the gate for this
            // step's exchange
            const EdgeExchange probe = apply_contact_flux(
                edge.k, false, u, flux, zone_i[e], u, flux, zone_j[e]);

            auto handle = [&](ZoneWatch& w, double mean, int marble) {
                const int wave = detectors[marble].waves_started() - 1;
                if (auto arr = w.push(t_s, mean, wave)) {
                    log.arrivals.push_back(*arr);
                    edge.gate_open = gate_rng.bernoulli(edge.gate_prob);
                }
            };
            handle(watch_i[e], probe.mean_i, edge.i);
            handle(watch_j[e], probe.mean_j, edge.j);

            if (edge.gate_open)
                apply_contact_flux(edge.k, true, u, flux, zone_i[e], u, flux,
                                   zone_j[e]);
        }

        ka.u = u.data();
        ka.v = v.data();
        ka.phi = phi.data();
        ka.flux = n_edges > 0 ? flux.data() : nullptr;
        ka.u_out = u2.data();
        ka.v_out = v2.data();
        const bool parallel =
            opt.exec == Exec::parallel ||
            (opt.exec == Exec::automatic && total >= kParallelThreshold);
        if (parallel)
            kernel::step_parallel(ka);
        else
            kernel::step_serial(ka);
        const int bad = kernel::first_bad_cell(u2.data(), v2.data(), total);
        if (bad >= 0) {
            int m = 0;
            while (bad >= offset[m + 1]) ++m;
            throw BlowUpError("solver blow-up at t = " + std::to_string(t_s) +
                              " s: marble " + std::to_string(m) + ", cell " +
                              std::to_string(bad - offset[m]));
        }
        u.swap(u2);
        v.swap(v2);

        const double t_next = (step_i + 1) * dt_s;
        if ((step_i + 1) % sample_every == 0) sample(t_next);
        if (frames_on && (step_i + 1) % frame_every == 0) {
            const FrameImage img = compose_frame(grids, offset, v, ps);
            write_pgm(frame_path(opt.frames_dir, frame_seq++), img);
        }
    }

    for (auto& det : detectors)
        for (const auto& ev : det.events()) log.oscillations.push_back(ev);
    std::sort(log.oscillations.begin(), log.oscillations.end(),
              [](const OscillationEvent& a, const OscillationEvent& b) {
                  return a.onset_s < b.onset_s ||
                         (a.onset_s == b.onset_s && a.marble < b.marble);
              });

    const TransferDetection td =
        detect_transfers(log.oscillations, log.arrivals, log.graph, attr_zones,
                         dp.transfer_window_s);
    log.transfers = td.transfers;
    log.pathways = extract_pathways(log.transfers);
    log.stats = experiment_statistics(log.oscillations, log.transfers,
                                      log.pathways, n_marbles, td.near_misses);
    return log;
}

std::array<bool, 4> gate_truth_table(const ExperimentConfig& cfg, double phi,
                                     const RunOptions& opt) {
    if (cfg.scenario != ScenarioKind::gate)
        throw ConfigError("gate: config scenario must be 'gate'");
    std::array<bool, 4> table{};
    for (int inputs = 0; inputs < 4; ++inputs) {
        ExperimentConfig c = cfg;
        c.kinetics.phi = phi;
        c.initiations.clear();
        auto add_input = [&](int marble, double angle_deg) {
            InitiationSpec s;
            s.time_s = cfg.gate.input_time_s;
            s.marble = marble;
            s.angle_deg = angle_deg;
            s.radius_frac = 0.9;
            s.radius_mm = cfg.gate.radius_mm;
            s.amplitude = cfg.gate.amplitude;
            c.initiations.push_back(s);
        };
        if (inputs & 1) add_input(0, 180.0);  // far rim of input A
        if (inputs & 2) add_input(2, 0.0);    // far rim of input B
        const RunLog log = run_scenario(c, opt);
        bool fired = false;
        const double t0 = cfg.gate.input_time_s;
        for (const auto& ev : log.oscillations)
            if (ev.marble == 3 && ev.onset_s > t0 &&
                ev.onset_s <= t0 + cfg.gate.read_window_s)
                fired = true;
        table[inputs] = fired;
    }
    return table;
}

TransferDetection redetect_transfers(const RunLog& log, double window_s) {
    const ExperimentConfig cfg = parse_config(log.config);
    std::vector<DiscGrid> grids;
    grids.reserve(log.marbles.size());
    for (const auto& m : log.marbles) grids.push_back(build_disc_mask(m));
    const double attr_mm = cfg.detection.attribution_zone_mm > 0.0
                               ? cfg.detection.attribution_zone_mm
                               : cfg.coupling.contact_zone_mm;
    const ContactZones zones = contact_zones(log.graph, grids, attr_mm);
    return detect_transfers(log.oscillations, log.arrivals, log.graph, zones,
                            window_s);
}

GateReport gate_demo(const ExperimentConfig& cfg, const RunOptions& opt) {
    GateReport r;
    r.phi_low = cfg.gate.phi_low;
    r.phi_high = cfg.gate.phi_high;
    r.table_low = gate_truth_table(cfg, cfg.gate.phi_low, opt);
    r.table_high = gate_truth_table(cfg, cfg.gate.phi_high, opt);
    r.differ = r.table_low != r.table_high;
    return r;
}

}  // namespace bzlm
