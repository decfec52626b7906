#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bzlm/analysis.hpp"
#include "bzlm/array.hpp"
#include "bzlm/kinetics.hpp"

namespace bzlm {

enum class ScenarioKind { single, disordered, ordered, gate };

std::string to_string(ScenarioKind kind);

struct PlacementSection {
    // single
    Vec2 position_mm{};
    // ordered
    int rows = 0;
    int cols = 0;
    double pitch_mm = 0.0;  // 0 -> marble diameter
    // disordered
    int count = 0;
    double dish_radius_mm = 0.0;
    double min_gap_mm = 0.0;
    int max_attempts = 100000;
};

struct CouplingConfig {
    double k_med = 6.0;
    double sigma = 0.5;
    double gate_prob = 0.15;
    double contact_tolerance_mm = 0.1;
    double contact_zone_mm = 0.3;
};

/// Scheduled local stimulation (the silver-wire analog). The site is given
/// in marble-polar form: angle plus radius as a fraction of the disc radius.
struct InitiationSpec {
    double time_s = 0.0;
    int marble = 0;
    double angle_deg = 0.0;
    double radius_frac = 0.0;
    double radius_mm = 0.3;
    double amplitude = 0.8;
    double repeat_every_s = 0.0;
    int count = 1;
};

/// Autonomous pacemakers: one self-oscillating low-phi patch per marble.
/// Seeded mode draws the patch centre uniformly in the inner
/// max_centre_frac of the disc and its phi uniformly in [phi_min, phi_max],
/// so marbles fire at slightly different rates.
struct PacemakerConfig {
    enum class Mode { none, seeded, explicit_list };
    Mode mode = Mode::none;
    double patch_radius_mm = 0.35;
    double phi_min = 0.0;
    double phi_max = 0.004;
    double max_centre_frac = 0.5;
    // patches switch on at a seeded per-marble time in [0, stagger_s] so the
    // array starts with decorrelated phases (marbles arrive mid-cycle)
    double stagger_s = 0.0;
    struct Patch {
        int marble = 0;
        Vec2 offset_mm{};  // relative to the marble centre
        double phi = 0.002;
    };
    std::vector<Patch> patches;  // explicit_list mode
};

struct GateSection {
    double phi_low = 0.05;
    double phi_high = 0.09;
    double input_time_s = 3.0;
    double read_window_s = 60.0;
    double amplitude = 0.8;
    double radius_mm = 0.35;
    std::vector<double> sweep_phis;  // optional grid for the sweep helper
};

struct OutputSection {
    double frames_every_s = 0.0;
};

struct ExperimentConfig {
    ScenarioKind scenario = ScenarioKind::single;
    std::uint64_t seed = 0;
    double duration_s = 0.0;
    double volume_ul = 50.0;
    int cells_per_diameter = 64;
    KineticsParams kinetics;
    double solver_dt = 5e-4;
    double solver_safety = 0.9;
    PlacementSection placement;
    CouplingConfig coupling;
    DetectionParams detection;
    std::vector<InitiationSpec> initiations;
    PacemakerConfig pacemakers;
    GateSection gate;
    OutputSection output;

    double grid_h_mm() const;
    MarbleSpec marble_template() const;
    void validate() const;

    /// Canonical resolved form; hashed into the run manifest and replayable
    /// through parse_config.
    nlohmann::json to_json() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace bzlm
