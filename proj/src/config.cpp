#include "bzlm/config.hpp"

#include <fstream>

namespace bzlm {

using nlohmann::json;

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::single: return "single";
        case ScenarioKind::disordered: return "disordered";
        case ScenarioKind::ordered: return "ordered";
        case ScenarioKind::gate: return "gate";
    }
    return "?";
}

double ExperimentConfig::grid_h_mm() const {
    return marble_template().diameter_mm() / cells_per_diameter;
}

MarbleSpec ExperimentConfig::marble_template() const {
    MarbleSpec m;
    m.volume_ul = volume_ul;
    m.grid_h_mm = std::cbrt(6.0 * volume_ul / M_PI) / cells_per_diameter;
    return m;
}

void ExperimentConfig::validate() const {
    kinetics.validate();
    marble_template().validate();
    if (!(duration_s > 0.0)) throw ConfigError("config: duration_s must be > 0");
    if (!(solver_dt > 0.0)) throw ConfigError("config: solver dt must be > 0");
    if (!(solver_safety > 0.0 && solver_safety <= 1.0))
        throw ConfigError("config: solver safety must be in (0,1]");
    if (coupling.gate_prob < 0.0 || coupling.gate_prob > 1.0)
        throw ConfigError("config: gate_prob must be in [0,1]");
    if (coupling.k_med < 0.0 || coupling.sigma < 0.0)
        throw ConfigError("config: k_med and sigma must be >= 0");
    if (coupling.contact_tolerance_mm < 0.0)
        throw ConfigError("config: contact tolerance must be >= 0");
    if (!(coupling.contact_zone_mm > 0.0))
        throw ConfigError("config: contact zone must be > 0");
    if (!(detection.sample_every_s > 0.0))
        throw ConfigError("config: detection sample_every_s must be > 0");
    if (!(detection.transfer_window_s > 0.0))
        throw ConfigError("config: transfer window must be > 0");
    if (!(detection.area_threshold > 0.0 && detection.area_threshold < 1.0))
        throw ConfigError("config: area threshold must be in (0,1)");
    if (!(detection.area_hysteresis > 0.0 &&
          detection.area_hysteresis < detection.area_threshold))
        throw ConfigError("config: hysteresis must be in (0, threshold)");
    switch (scenario) {
        case ScenarioKind::single:
            break;
        case ScenarioKind::ordered:
            if (placement.rows < 1 || placement.cols < 1)
                throw ConfigError("config: ordered placement needs rows, cols >= 1");
            break;
        case ScenarioKind::disordered:
            if (placement.count < 1)
                throw ConfigError("config: disordered placement needs count >= 1");
            if (!(placement.dish_radius_mm > 0.0))
                throw ConfigError("config: disordered placement needs dish radius");
            break;
        case ScenarioKind::gate:
            if (!(gate.read_window_s > 0.0))
                throw ConfigError("config: gate read window must be > 0");
            break;
    }
    for (const auto& init : initiations) {
        if (init.marble < 0) throw ConfigError("config: initiation marble < 0");
        if (!(init.amplitude > 0.0))
            throw ConfigError("config: initiation amplitude must be > 0");
        if (init.radius_frac < 0.0 || init.radius_frac > 1.0)
            throw ConfigError("config: initiation radius_frac must be in [0,1]");
        if (init.count < 1) throw ConfigError("config: initiation count must be >= 1");
        if (init.count > 1 && !(init.repeat_every_s > 0.0))
            throw ConfigError("config: repeated initiation needs repeat_every_s > 0");
    }
    if (pacemakers.mode != PacemakerConfig::Mode::none) {
        if (!(pacemakers.patch_radius_mm > 0.0))
            throw ConfigError("config: pacemaker patch radius must be > 0");
        if (pacemakers.phi_min < 0.0 || pacemakers.phi_max < pacemakers.phi_min)
            throw ConfigError("config: pacemaker phi range invalid");
        if (pacemakers.max_centre_frac < 0.0 || pacemakers.max_centre_frac > 1.0)
            throw ConfigError("config: pacemaker max_centre_frac must be in [0,1]");
        if (pacemakers.stagger_s < 0.0)
            throw ConfigError("config: pacemaker stagger_s must be >= 0");
    }
}

namespace {

ScenarioKind scenario_from(const std::string& s) {
    if (s == "single") return ScenarioKind::single;
    if (s == "disordered") return ScenarioKind::disordered;
    if (s == "ordered") return ScenarioKind::ordered;
    if (s == "gate") return ScenarioKind::gate;
    throw ConfigError("config: unknown scenario '" + s + "'");
}

KineticsParams kinetics_from(const json& j) {
    KineticsParams p;
    if (j.contains("preset")) {
        const std::string name = j.at("preset").get<std::string>();
        if (name == "excitable")
            p = KineticsParams::excitable();
        else if (name == "oscillatory")
            p = KineticsParams::oscillatory();
        else
            throw ConfigError("config: unknown kinetics preset '" + name + "'");
    }
    if (j.contains("epsilon")) p.epsilon = j.at("epsilon").get<double>();
    if (j.contains("f")) p.f = j.at("f").get<double>();
    if (j.contains("q")) p.q = j.at("q").get<double>();
    if (j.contains("phi")) p.phi = j.at("phi").get<double>();
    if (j.contains("time_unit_s")) p.time_unit_s = j.at("time_unit_s").get<double>();
    if (j.contains("diffusion_u_mm2_per_s"))
        p.diffusion_u = j.at("diffusion_u_mm2_per_s").get<double>();
    return p;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    try {
        ExperimentConfig c;
        c.scenario = scenario_from(j.at("scenario").get<std::string>());
        if (!j.contains("seed"))
            throw ConfigError("config: seed is required (no entropy defaults)");
        c.seed = j.at("seed").get<std::uint64_t>();
        c.duration_s = j.at("duration_s").get<double>();
        const json& m = j.at("marble");
        c.volume_ul = m.at("volume_ul").get<double>();
        c.cells_per_diameter = m.value("cells_per_diameter", 64);
        if (j.contains("kinetics")) c.kinetics = kinetics_from(j.at("kinetics"));
        if (j.contains("solver")) {
            c.solver_dt = j.at("solver").value("dt", c.solver_dt);
            c.solver_safety = j.at("solver").value("safety", c.solver_safety);
        }
        if (j.contains("placement")) {
            const json& p = j.at("placement");
            if (p.contains("position_mm")) {
                c.placement.position_mm = {p.at("position_mm").at(0).get<double>(),
                                           p.at("position_mm").at(1).get<double>()};
            }
            c.placement.rows = p.value("rows", 0);
            c.placement.cols = p.value("cols", 0);
            c.placement.pitch_mm = p.value("pitch_mm", 0.0);
            c.placement.count = p.value("count", 0);
            c.placement.dish_radius_mm = p.value("dish_radius_mm", 0.0);
            c.placement.min_gap_mm = p.value("min_gap_mm", 0.0);
            c.placement.max_attempts = p.value("max_attempts", 100000);
        }
        if (j.contains("coupling")) {
            const json& q = j.at("coupling");
            c.coupling.k_med = q.value("k_med", c.coupling.k_med);
            c.coupling.sigma = q.value("sigma", c.coupling.sigma);
            c.coupling.gate_prob = q.value("gate_prob", c.coupling.gate_prob);
            c.coupling.contact_tolerance_mm =
                q.value("contact_tolerance_mm", c.coupling.contact_tolerance_mm);
            c.coupling.contact_zone_mm =
                q.value("contact_zone_mm", c.coupling.contact_zone_mm);
        }
        if (j.contains("detection")) {
            const json& d = j.at("detection");
            c.detection.area_threshold =
                d.value("area_threshold", c.detection.area_threshold);
            c.detection.area_hysteresis =
                d.value("area_hysteresis", c.detection.area_hysteresis);
            c.detection.v_cell_threshold = d.value("v_cell_threshold", 0.0);
            c.detection.u_zone_on = d.value("u_zone_on", 0.0);
            c.detection.u_zone_off = d.value("u_zone_off", 0.0);
            c.detection.sample_every_s =
                d.value("sample_every_s", c.detection.sample_every_s);
            c.detection.transfer_window_s =
                d.value("transfer_window_s", c.detection.transfer_window_s);
            c.detection.rim_band_mm = d.value("rim_band_mm", 0.0);
            c.detection.attribution_zone_mm =
                d.value("attribution_zone_mm", 0.0);
        }
        if (j.contains("initiations")) {
            for (const json& e : j.at("initiations")) {
                InitiationSpec s;
                s.time_s = e.at("time_s").get<double>();
                s.marble = e.value("marble", 0);
                s.angle_deg = e.value("angle_deg", 0.0);
                s.radius_frac = e.value("radius_frac", 0.0);
                s.radius_mm = e.value("radius_mm", s.radius_mm);
                s.amplitude = e.value("amplitude", s.amplitude);
                s.repeat_every_s = e.value("repeat_every_s", 0.0);
                s.count = e.value("count", 1);
                c.initiations.push_back(s);
            }
        }
        if (j.contains("pacemakers")) {
            const json& p = j.at("pacemakers");
            const std::string mode = p.value("mode", "none");
            if (mode == "none")
                c.pacemakers.mode = PacemakerConfig::Mode::none;
            else if (mode == "seeded")
                c.pacemakers.mode = PacemakerConfig::Mode::seeded;
            else if (mode == "explicit")
                c.pacemakers.mode = PacemakerConfig::Mode::explicit_list;
            else
                throw ConfigError("config: unknown pacemaker mode '" + mode + "'");
            c.pacemakers.patch_radius_mm =
                p.value("patch_radius_mm", c.pacemakers.patch_radius_mm);
            c.pacemakers.phi_min = p.value("phi_min", c.pacemakers.phi_min);
            c.pacemakers.phi_max = p.value("phi_max", c.pacemakers.phi_max);
            c.pacemakers.max_centre_frac =
                p.value("max_centre_frac", c.pacemakers.max_centre_frac);
            c.pacemakers.stagger_s = p.value("stagger_s", 0.0);
            if (p.contains("patches")) {
                for (const json& e : p.at("patches")) {
                    PacemakerConfig::Patch patch;
                    patch.marble = e.at("marble").get<int>();
                    patch.offset_mm = {e.at("offset_mm").at(0).get<double>(),
                                       e.at("offset_mm").at(1).get<double>()};
                    patch.phi = e.at("phi").get<double>();
                    c.pacemakers.patches.push_back(patch);
                }
            }
        }
        if (j.contains("gate")) {
            const json& g = j.at("gate");
            c.gate.phi_low = g.value("phi_low", c.gate.phi_low);
            c.gate.phi_high = g.value("phi_high", c.gate.phi_high);
            c.gate.input_time_s = g.value("input_time_s", c.gate.input_time_s);
            c.gate.read_window_s = g.value("read_window_s", c.gate.read_window_s);
            c.gate.amplitude = g.value("amplitude", c.gate.amplitude);
            c.gate.radius_mm = g.value("radius_mm", c.gate.radius_mm);
            if (g.contains("sweep_phis"))
                for (const json& v : g.at("sweep_phis"))
                    c.gate.sweep_phis.push_back(v.get<double>());
        }
        if (j.contains("output")) {
            c.output.frames_every_s =
                j.at("output").value("frames_every_s", 0.0);
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: parse error in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

json ExperimentConfig::to_json() const {
    json j;
    j["scenario"] = bzlm::to_string(scenario);
    j["seed"] = seed;
    j["duration_s"] = duration_s;
    j["marble"] = {{"volume_ul", volume_ul},
                   {"cells_per_diameter", cells_per_diameter}};
    j["kinetics"] = {{"epsilon", kinetics.epsilon},
                     {"f", kinetics.f},
                     {"q", kinetics.q},
                     {"phi", kinetics.phi},
                     {"time_unit_s", kinetics.time_unit_s},
                     {"diffusion_u_mm2_per_s", kinetics.diffusion_u}};
    j["solver"] = {{"dt", solver_dt}, {"safety", solver_safety}};
    json p;
    switch (scenario) {
        case ScenarioKind::single:
            p["position_mm"] = {placement.position_mm.x, placement.position_mm.y};
            break;
        case ScenarioKind::ordered:
            p["rows"] = placement.rows;
            p["cols"] = placement.cols;
            p["pitch_mm"] = placement.pitch_mm;
            break;
        case ScenarioKind::disordered:
            p["count"] = placement.count;
            p["dish_radius_mm"] = placement.dish_radius_mm;
            p["min_gap_mm"] = placement.min_gap_mm;
            p["max_attempts"] = placement.max_attempts;
            break;
        case ScenarioKind::gate:
            break;
    }
    j["placement"] = p;
    j["coupling"] = {{"k_med", coupling.k_med},
                     {"sigma", coupling.sigma},
                     {"gate_prob", coupling.gate_prob},
                     {"contact_tolerance_mm", coupling.contact_tolerance_mm},
                     {"contact_zone_mm", coupling.contact_zone_mm}};
    j["detection"] = {{"area_threshold", detection.area_threshold},
                      {"area_hysteresis", detection.area_hysteresis},
                      {"v_cell_threshold", detection.v_cell_threshold},
                      {"u_zone_on", detection.u_zone_on},
                      {"u_zone_off", detection.u_zone_off},
                      {"sample_every_s", detection.sample_every_s},
                      {"transfer_window_s", detection.transfer_window_s},
                      {"rim_band_mm", detection.rim_band_mm},
                      {"attribution_zone_mm", detection.attribution_zone_mm}};
    json inits = json::array();
    for (const auto& s : initiations) {
        inits.push_back({{"time_s", s.time_s},
                         {"marble", s.marble},
                         {"angle_deg", s.angle_deg},
                         {"radius_frac", s.radius_frac},
                         {"radius_mm", s.radius_mm},
                         {"amplitude", s.amplitude},
                         {"repeat_every_s", s.repeat_every_s},
                         {"count", s.count}});
    }
    j["initiations"] = inits;
    json pm;
    pm["mode"] = pacemakers.mode == PacemakerConfig::Mode::none ? "none"
                 : pacemakers.mode == PacemakerConfig::Mode::seeded
                     ? "seeded"
                     : "explicit";
    pm["patch_radius_mm"] = pacemakers.patch_radius_mm;
    pm["phi_min"] = pacemakers.phi_min;
    pm["phi_max"] = pacemakers.phi_max;
    pm["max_centre_frac"] = pacemakers.max_centre_frac;
    pm["stagger_s"] = pacemakers.stagger_s;
    if (!pacemakers.patches.empty()) {
        json arr = json::array();
        for (const auto& patch : pacemakers.patches)
            arr.push_back({{"marble", patch.marble},
                           {"offset_mm", {patch.offset_mm.x, patch.offset_mm.y}},
                           {"phi", patch.phi}});
        pm["patches"] = arr;
    }
    j["pacemakers"] = pm;
    if (scenario == ScenarioKind::gate) {
        j["gate"] = {{"phi_low", gate.phi_low},
                     {"phi_high", gate.phi_high},
                     {"input_time_s", gate.input_time_s},
                     {"read_window_s", gate.read_window_s},
                     {"amplitude", gate.amplitude},
                     {"radius_mm", gate.radius_mm},
                     {"sweep_phis", gate.sweep_phis}};
    }
    j["output"] = {{"frames_every_s", output.frames_every_s}};
    return j;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string s = cfg.to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace bzlm
