#pragma once

#include <vector>

#include "bzlm/common.hpp"
#include "bzlm/medium.hpp"

namespace bzlm {

/// One contact between two touching marbles. The permeability k sets the
/// exchange rate; the gate models sporadic per-wave transfer: it is redrawn
/// (open with probability gate_prob) each time a new wave reaches the
/// contact zone on either side.
struct ContactEdge {
    int i = 0;
    int j = 0;
    Vec2 contact_point_mm{};
    double k = 0.0;
    double gate_prob = 0.0;
    bool gate_open = false;
};

struct ContactGraph {
    std::vector<MarbleSpec> marbles;
    std::vector<ContactEdge> edges;
};

struct PlacementConfig {
    int count = 0;
    double dish_radius_mm = 0.0;
    double min_gap_mm = 0.0;
    int max_attempts = 100000;
    std::uint64_t seed = 0;
};

/// Lattice placement: marble (r,c) sits at (c*pitch, r*pitch).
std::vector<MarbleSpec> place_ordered(int rows, int cols, double pitch_mm,
                                      const MarbleSpec& spec_template);

/// Random sequential placement in a dish: candidate centres drawn uniformly,
/// rejected when closer than sum-of-radii + min_gap to a placed marble.
/// Deterministic for a given seed.
std::vector<MarbleSpec> place_disordered(const PlacementConfig& cfg,
                                         const MarbleSpec& spec_template);

/// One edge per marble pair with centre distance <= (d_i+d_j)/2 + tolerance;
/// k drawn log-normally (median k_med, shape sigma) from the seeded RNG.
ContactGraph contact_graph(const std::vector<MarbleSpec>& marbles,
                           double contact_tolerance_mm, double k_med,
                           double sigma, double gate_prob, std::uint64_t seed);

/// Indices of the cells of each marble that form an edge's contact zone
/// (cells within contact_zone_mm of the contact point).
struct ContactZones {
    std::vector<std::vector<std::int32_t>> side_i;  // per edge, cells in marble i
    std::vector<std::vector<std::int32_t>> side_j;  // per edge, cells in marble j
};

/// Throws GeometryError if any zone comes out empty (marbles too far apart
/// for the configured zone radius).
ContactZones contact_zones(const ContactGraph& graph,
                           const std::vector<DiscGrid>& grids,
                           double contact_zone_mm);

/// One edge's exchange. Always computes the zone means; when applied, the
/// total k*(mean_i - mean_j) enters the receiver zone uniformly and leaves
/// the donor zone weighted by each cell's activator, so no cell can be
/// drained below zero. For a uniformly excited donor zone the weighting
/// reduces to the uniform split.
struct EdgeExchange {
    double mean_i = 0.0;
    double mean_j = 0.0;
};

EdgeExchange apply_contact_flux(double k, bool apply,
                                std::span<const double> u_i,
                                std::span<double> flux_i,
                                std::span<const std::int32_t> zone_i,
                                std::span<const double> u_j,
                                std::span<double> flux_j,
                                std::span<const std::int32_t> zone_j);

/// Gated diffusive exchange over the whole graph: open edges exchange as
/// above, closed edges contribute nothing.
/// flux[m] must be pre-sized to grids[m].n() and is accumulated into.
void coupling_fluxes(const ContactGraph& graph, const ContactZones& zones,
                     const std::vector<DiscGrid>& grids,
                     const std::vector<MediumState>& states,
                     std::vector<std::vector<double>>& flux);

/// One wave reaching one edge's contact zone; gates are redrawn per arrival.
struct GateEpisode {
    int edge = 0;
    double t = 0.0;
};

/// Redraws gate_open with probability gate_prob for each episode, in order.
/// Returns the number of episodes that left the gate open.
int update_gates(ContactGraph& graph, const std::vector<GateEpisode>& episodes,
                 Rng& rng);

}  // namespace bzlm
