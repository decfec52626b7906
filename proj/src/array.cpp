#include "bzlm/array.hpp"

#include <cmath>
#include <sstream>

namespace bzlm {

std::vector<MarbleSpec> place_ordered(int rows, int cols, double pitch_mm,
                                      const MarbleSpec& spec_template) {
    if (rows < 1 || cols < 1)
        throw ConfigError("place_ordered: rows and cols must be >= 1");
    if (!(pitch_mm > 0.0)) throw ConfigError("place_ordered: pitch must be > 0");
    std::vector<MarbleSpec> out;
    out.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            MarbleSpec m = spec_template;
            m.position_mm = {c * pitch_mm, r * pitch_mm};
            out.push_back(m);
        }
    return out;
}

std::vector<MarbleSpec> place_disordered(const PlacementConfig& cfg,
                                         const MarbleSpec& spec_template) {
    if (cfg.count < 1) throw ConfigError("place_disordered: count must be >= 1");
    if (!(cfg.dish_radius_mm > 0.0))
        throw ConfigError("place_disordered: dish radius must be > 0");
    const double r_marble = 0.5 * spec_template.diameter_mm();
    const double r_centre = cfg.dish_radius_mm - r_marble;
    if (r_centre <= 0.0)
        throw ConfigError("place_disordered: dish smaller than one marble");

    Rng rng(cfg.seed);
    std::vector<MarbleSpec> placed;
    placed.reserve(cfg.count);
    int attempts = 0;
    while (static_cast<int>(placed.size()) < cfg.count) {
        if (attempts++ >= cfg.max_attempts) {
            std::ostringstream os;
            os << "place_disordered: placed only " << placed.size() << " of "
               << cfg.count << " marbles in " << cfg.max_attempts
               << " attempts (dish radius " << cfg.dish_radius_mm
               << " mm too tight?)";
            throw PackingError(os.str(), static_cast<int>(placed.size()));
        }
        const Vec2 c = rng.in_disc(r_centre);
        bool ok = true;
        for (const auto& m : placed) {
            const double min_d =
                r_marble + 0.5 * m.diameter_mm() + cfg.min_gap_mm;
            if (dist(c, m.position_mm) < min_d) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        MarbleSpec m = spec_template;
        m.position_mm = c;
        placed.push_back(m);
    }
    return placed;
}

ContactGraph contact_graph(const std::vector<MarbleSpec>& marbles,
                           double contact_tolerance_mm, double k_med,
                           double sigma, double gate_prob, std::uint64_t seed) {
    if (contact_tolerance_mm < 0.0)
        throw ConfigError("contact_graph: tolerance must be >= 0");
    if (k_med < 0.0 || sigma < 0.0)
        throw ConfigError("contact_graph: k_med and sigma must be >= 0");
    if (gate_prob < 0.0 || gate_prob > 1.0)
        throw ConfigError("contact_graph: gate_prob must be in [0,1]");

    ContactGraph g;
    g.marbles = marbles;
    Rng rng(seed);
    const int n = static_cast<int>(marbles.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double d = dist(marbles[i].position_mm, marbles[j].position_mm);
            const double touch =
                0.5 * (marbles[i].diameter_mm() + marbles[j].diameter_mm());
            if (d <= touch + contact_tolerance_mm) {
                ContactEdge e;
                e.i = i;
                e.j = j;
                e.contact_point_mm =
                    0.5 * (marbles[i].position_mm + marbles[j].position_mm);
                e.k = sigma == 0.0 ? k_med : k_med * std::exp(sigma * rng.normal());
                e.gate_prob = gate_prob;
                e.gate_open = false;
                g.edges.push_back(e);
            }
        }
    return g;
}

ContactZones contact_zones(const ContactGraph& graph,
                           const std::vector<DiscGrid>& grids,
                           double contact_zone_mm) {
    if (grids.size() != graph.marbles.size())
        throw GeometryError("contact_zones: grids do not match marbles");
    ContactZones z;
    z.side_i.resize(graph.edges.size());
    z.side_j.resize(graph.edges.size());
    const double r2 = contact_zone_mm * contact_zone_mm;
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const ContactEdge& edge = graph.edges[e];
        auto collect = [&](int marble) {
            std::vector<std::int32_t> cells;
            const DiscGrid& g = grids[marble];
            for (int c = 0; c < g.n(); ++c) {
                const Vec2 d = g.pos_mm[c] - edge.contact_point_mm;
                if (dot(d, d) <= r2) cells.push_back(c);
            }
            return cells;
        };
        z.side_i[e] = collect(edge.i);
        z.side_j[e] = collect(edge.j);
        if (z.side_i[e].empty() || z.side_j[e].empty()) {
            std::ostringstream os;
            os << "contact_zones: empty zone on edge " << e << " (marbles "
               << edge.i << "," << edge.j << "): contact point ("
               << edge.contact_point_mm.x << ", " << edge.contact_point_mm.y
               << ") mm lies more than " << contact_zone_mm
               << " mm from the nearest cell";
            throw GeometryError(os.str());
        }
    }
    return z;
}

EdgeExchange apply_contact_flux(double k, bool apply,
                                std::span<const double> u_i,
                                std::span<double> flux_i,
                                std::span<const std::int32_t> zone_i,
                                std::span<const double> u_j,
                                std::span<double> flux_j,
                                std::span<const std::int32_t> zone_j) {
    double sum_i = 0.0, sum_j = 0.0;
    for (const auto c : zone_i) sum_i += u_i[c];
    for (const auto c : zone_j) sum_j += u_j[c];
    EdgeExchange ex;
    ex.mean_i = sum_i / static_cast<double>(zone_i.size());
    ex.mean_j = sum_j / static_cast<double>(zone_j.size());
    if (!apply || k == 0.0) return ex;

    const double total = k * (ex.mean_i - ex.mean_j);
    if (total == 0.0) return ex;
    const bool i_donates = total > 0.0;
    const auto& donor = i_donates ? zone_i : zone_j;
    const auto& receiver = i_donates ? zone_j : zone_i;
    const auto u_donor = i_donates ? u_i : u_j;
    const auto fl_donor = i_donates ? flux_i : flux_j;
    const auto fl_receiver = i_donates ? flux_j : flux_i;
    const double donor_sum = i_donates ? sum_i : sum_j;
    if (donor_sum <= 0.0) return ex;  // nothing available to move

    const double magnitude = std::abs(total);
    const double per_receiver = magnitude / static_cast<double>(receiver.size());
    for (const auto c : receiver) fl_receiver[c] += per_receiver;
    const double scale = magnitude / donor_sum;
    for (const auto c : donor) fl_donor[c] -= scale * u_donor[c];
    return ex;
}

void coupling_fluxes(const ContactGraph& graph, const ContactZones& zones,
                     const std::vector<DiscGrid>& grids,
                     const std::vector<MediumState>& states,
                     std::vector<std::vector<double>>& flux) {
    if (states.size() != graph.marbles.size())
        throw GeometryError("coupling_fluxes: states do not match marbles");
    for (std::size_t m = 0; m < grids.size(); ++m)
        if (flux[m].size() != static_cast<std::size_t>(grids[m].n()))
            throw GeometryError("coupling_fluxes: flux buffers not pre-sized");
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const ContactEdge& edge = graph.edges[e];
        apply_contact_flux(edge.k, edge.gate_open, states[edge.i].u,
                           flux[edge.i], zones.side_i[e], states[edge.j].u,
                           flux[edge.j], zones.side_j[e]);
    }
}

int update_gates(ContactGraph& graph, const std::vector<GateEpisode>& episodes,
                 Rng& rng) {
    int opened = 0;
    for (const auto& ep : episodes) {
        if (ep.edge < 0 || ep.edge >= static_cast<int>(graph.edges.size()))
            throw std::invalid_argument("update_gates: episode edge out of range");
        ContactEdge& e = graph.edges[ep.edge];
        e.gate_open = rng.bernoulli(e.gate_prob);
        if (e.gate_open) ++opened;
    }
    return opened;
}

}  // namespace bzlm
