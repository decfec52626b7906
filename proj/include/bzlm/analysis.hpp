#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bzlm/array.hpp"
#include "bzlm/medium.hpp"

namespace bzlm {

/// Detection thresholds. Per-cell and zone thresholds default to values
/// derived from the kinetics preset's rest/pulse levels (see derive()).
struct DetectionParams {
    double area_threshold = 0.05;   // excited-area fraction that opens an event
    double area_hysteresis = 0.03;  // re-arm after fraction < threshold - hysteresis
    double v_cell_threshold = 0.0;  // per-cell "visibly blue" level
    double u_zone_on = 0.0;         // zone-mean u marking wave arrival at a contact
    double u_zone_off = 0.0;
    double sample_every_s = 0.5;
    double transfer_window_s = 10.0;
    double rim_band_mm = 0.0;  // 0 -> 1.5 h at detector construction
    // Radius for matching a wave's origin to a contact (0 -> the flux zone
    // radius). Detection runs on the catalyst field, which turns on a beat
    // after the activator, so by onset the activator peak sits a front-width
    // or so beyond the exchange zone; attribution must allow for that.
    double attribution_zone_mm = 0.0;

    /// Fill the threshold fields from the medium's rest and pulse levels:
    /// v_cell_threshold at the midpoint, zone thresholds at 15%/5% of the
    /// pulse height.
    static DetectionParams derive(const KineticsParams& kp, DetectionParams base);
    static DetectionParams derive(const KineticsParams& kp) {
        return derive(kp, DetectionParams{});
    }
};

struct OscillationEvent {
    int marble = 0;
    int wave_id = 0;  // per-marble ordinal, 0-based
    double onset_s = 0.0;
    std::optional<double> half1_s;  // front first covers the far half
    std::optional<double> half2_s;  // front first reaches the far rim
    int origin_cell = 0;
};

struct TransferEvent {
    int source_marble = 0;
    int target_marble = 0;
    int source_wave = 0;
    int target_wave = 0;
    double time_s = 0.0;  // target onset
    int edge = 0;
};

struct Pathway {
    std::vector<int> marbles;       // ordered chain, length >= 2
    std::vector<int> transfer_ids;  // indices into the transfer list
    double start_s = 0.0;
    double end_s = 0.0;
};

/// Upward crossings of `threshold` with re-arm below `threshold - hysteresis`.
/// Returns the sample indices of the crossings. This is the scalar state
/// machine behind oscillation counting; exposed so tests can drive it on
/// synthetic traces directly.
std::vector<int> count_crossings(std::span<const double> trace,
                                 double threshold, double hysteresis);

/// Crossing-time decomposition of one completed event:
///   t_half1 = half1 - onset, t_full = half2 - onset, t_half2 = t_full - t_half1.
/// Returns nothing for partial waves (no half2), which are excluded from
/// averages.
struct CrossingTimes {
    double t_half1_s = 0.0;
    double t_half2_s = 0.0;
    double t_full_s = 0.0;
    bool degenerate = false;  // onset == half1 == half2
};

std::optional<CrossingTimes> measure_crossing(const OscillationEvent& event);

/// Incremental per-marble detector. Feed frames in time order; events are
/// final once the marble's excited fraction has re-armed.
class MarbleDetector {
public:
    MarbleDetector(int marble_id, const DiscGrid& grid, const DetectionParams& dp);

    /// Consume one sampled frame (u and v over the marble's mask).
    void push(double t_s, std::span<const double> u, std::span<const double> v);

    const std::vector<OscillationEvent>& events() const { return events_; }
    int waves_started() const { return next_wave_id_; }

private:
    struct ActiveWave {
        std::size_t event_index;
        Vec2 axis;  // unit vector origin -> centre (wave travel direction)
    };

    int marble_id_;
    const DiscGrid* grid_;
    DetectionParams dp_;
    double rim_band_mm_;
    bool armed_ = true;
    double last_t_ = -1.0;
    int next_wave_id_ = 0;
    std::vector<ActiveWave> active_;
    std::vector<OscillationEvent> events_;
    std::vector<char> labels_;  // scratch for component labelling

    void open_events(double t_s, std::span<const double> u,
                     std::span<const double> v);
    void track_halves(double t_s, std::span<const double> v);
};

/// Full-history wrapper over MarbleDetector for one marble.
struct FieldFrame {
    double t_s = 0.0;
    std::vector<double> u;
    std::vector<double> v;
};

std::vector<OscillationEvent> detect_oscillations(
    const DiscGrid& grid, std::span<const FieldFrame> history,
    const DetectionParams& dp, int marble_id = 0);

/// A source wave's front reaching one side of a contact edge.
struct ZoneArrival {
    int edge = 0;
    int side_marble = 0;
    int source_wave = 0;  // -1 when no oscillation event had opened yet
    double t_s = 0.0;
};

/// State machine on the zone-mean activator that timestamps wave arrivals
/// at one side of one edge.
class ZoneWatch {
public:
    ZoneWatch(int edge, int side_marble, double u_on, double u_off)
        : edge_(edge), side_(side_marble), u_on_(u_on), u_off_(u_off) {}

    /// Returns an arrival if the zone mean crossed u_on while armed.
    std::optional<ZoneArrival> push(double t_s, double zone_mean_u,
                                    int current_wave_id);

private:
    int edge_;
    int side_;
    double u_on_, u_off_;
    bool excited_ = false;
};

/// Matches target onsets to source-wave zone arrivals:
/// a transfer needs (a) an arrival at edge (A,B) on A's side at t0,
/// (b) a B onset in (t0, t0+window], (c) B's origin cell inside that edge's
/// zone in B. Ties go to the smallest onset-t0 gap; one source per target
/// wave. Losing candidates are counted as near misses.
struct TransferDetection {
    std::vector<TransferEvent> transfers;
    int near_misses = 0;
};

TransferDetection detect_transfers(std::span<const OscillationEvent> oscillations,
                                   std::span<const ZoneArrival> arrivals,
                                   const ContactGraph& graph,
                                   const ContactZones& zones, double window_s);

/// Maximal chains of transfers where the wave instance continues:
/// (A->B, target wave w) links to (B->C, source wave w).
std::vector<Pathway> extract_pathways(std::span<const TransferEvent> transfers);

struct ExperimentStatistics {
    std::vector<int> per_marble_oscillations;
    int total_oscillations = 0;
    int total_transfers = 0;
    std::optional<double> transfer_fraction;  // absent when N == 0
    int longest_pathway_marbles = 0;
    int near_misses = 0;
    int busiest_marble = -1;
    int quietest_marble = -1;
};

ExperimentStatistics experiment_statistics(
    std::span<const OscillationEvent> oscillations,
    std::span<const TransferEvent> transfers, std::span<const Pathway> pathways,
    int n_marbles, int near_misses = 0);

}  // namespace bzlm
