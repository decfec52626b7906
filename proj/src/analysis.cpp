#include "bzlm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace bzlm {

DetectionParams DetectionParams::derive(const KineticsParams& kp,
                                        DetectionParams base) {
    const PulseStats ps = pulse_stats(kp);
    DetectionParams dp = base;
    if (dp.v_cell_threshold == 0.0)
        dp.v_cell_threshold = 0.5 * (ps.v_rest + ps.v_max);
    const double pulse = ps.u_max - ps.u_rest;
    if (dp.u_zone_on == 0.0) dp.u_zone_on = ps.u_rest + 0.15 * pulse;
    if (dp.u_zone_off == 0.0) dp.u_zone_off = ps.u_rest + 0.05 * pulse;
    return dp;
}

std::vector<int> count_crossings(std::span<const double> trace,
                                 double threshold, double hysteresis) {
    std::vector<int> onsets;
    bool armed = true;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (armed && trace[i] >= threshold) {
            onsets.push_back(static_cast<int>(i));
            armed = false;
        } else if (!armed && trace[i] < threshold - hysteresis) {
            armed = true;
        }
    }
    return onsets;
}

std::optional<CrossingTimes> measure_crossing(const OscillationEvent& event) {
    if (!event.half1_s || !event.half2_s) return std::nullopt;
    CrossingTimes ct;
    ct.t_half1_s = *event.half1_s - event.onset_s;
    ct.t_full_s = *event.half2_s - event.onset_s;
    ct.t_half2_s = ct.t_full_s - ct.t_half1_s;
    ct.degenerate = ct.t_full_s == 0.0 && ct.t_half1_s == 0.0;
    return ct;
}

MarbleDetector::MarbleDetector(int marble_id, const DiscGrid& grid,
                               const DetectionParams& dp)
    : marble_id_(marble_id), grid_(&grid), dp_(dp) {
    rim_band_mm_ = dp.rim_band_mm > 0.0 ? dp.rim_band_mm : 1.5 * grid.h_mm;
    labels_.resize(grid.n());
}

void MarbleDetector::push(double t_s, std::span<const double> u,
                          std::span<const double> v) {
    if (t_s <= last_t_)
        throw std::invalid_argument("detector: non-monotone time axis");
    last_t_ = t_s;

    int excited = 0;
    for (const double x : v)
        if (x > dp_.v_cell_threshold) ++excited;
    const double fraction = static_cast<double>(excited) / grid_->n();

    if (armed_ && fraction >= dp_.area_threshold) {
        armed_ = false;
        open_events(t_s, u, v);
    } else if (!armed_ && fraction < dp_.area_threshold - dp_.area_hysteresis) {
        armed_ = true;
        active_.clear();  // partial waves keep whatever halves they reached
    }

    if (!active_.empty()) track_halves(t_s, v);
}

void MarbleDetector::open_events(double t_s, std::span<const double> u,
                                 std::span<const double> v) {
    // Connected components of the super-threshold region: simultaneous waves
    // count separately.
    std::fill(labels_.begin(), labels_.end(), 0);
    std::vector<std::int32_t> stack;
    for (int seed = 0; seed < grid_->n(); ++seed) {
        if (labels_[seed] || v[seed] <= dp_.v_cell_threshold) continue;
        // flood this component, finding its activator peak
        int origin = seed;
        double peak = u[seed];
        labels_[seed] = 1;
        stack.assign(1, seed);
        while (!stack.empty()) {
            const int c = stack.back();
            stack.pop_back();
            if (u[c] > peak) {
                peak = u[c];
                origin = c;
            }
            for (const auto nb : grid_->nbr[c]) {
                if (!labels_[nb] && v[nb] > dp_.v_cell_threshold) {
                    labels_[nb] = 1;
                    stack.push_back(nb);
                }
            }
        }

        OscillationEvent ev;
        ev.marble = marble_id_;
        ev.wave_id = next_wave_id_++;
        ev.onset_s = t_s;
        ev.origin_cell = origin;

        ActiveWave aw;
        aw.event_index = events_.size();
        Vec2 axis = grid_->centre_mm - grid_->pos_mm[origin];
        const double len = norm(axis);
        aw.axis = len > 1e-12 ? (1.0 / len) * axis : Vec2{1.0, 0.0};
        events_.push_back(ev);
        active_.push_back(aw);
    }
}

void MarbleDetector::track_halves(double t_s, std::span<const double> v) {
    for (auto& aw : active_) {
        OscillationEvent& ev = events_[aw.event_index];
        if (ev.half1_s && ev.half2_s) continue;
        const double rim_proj = grid_->radius_mm - rim_band_mm_;
        bool far_half = false, far_rim = false;
        for (int c = 0; c < grid_->n(); ++c) {
            if (v[c] <= dp_.v_cell_threshold) continue;
            const double proj = dot(grid_->pos_mm[c] - grid_->centre_mm, aw.axis);
            if (proj > 0.0) far_half = true;
            if (proj >= rim_proj) {
                far_rim = true;
                break;
            }
        }
        if (!ev.half1_s && (far_half || far_rim)) ev.half1_s = t_s;
        if (!ev.half2_s && far_rim) ev.half2_s = t_s;
    }
}

std::vector<OscillationEvent> detect_oscillations(
    const DiscGrid& grid, std::span<const FieldFrame> history,
    const DetectionParams& dp, int marble_id) {
    MarbleDetector det(marble_id, grid, dp);
    for (const auto& f : history) det.push(f.t_s, f.u, f.v);
    return det.events();
}

std::optional<ZoneArrival> ZoneWatch::push(double t_s, double zone_mean_u,
                                           int current_wave_id) {
    if (!excited_ && zone_mean_u >= u_on_) {
        excited_ = true;
        return ZoneArrival{edge_, side_, current_wave_id, t_s};
    }
    if (excited_ && zone_mean_u < u_off_) excited_ = false;
    return std::nullopt;
}

TransferDetection detect_transfers(std::span<const OscillationEvent> oscillations,
                                   std::span<const ZoneArrival> arrivals,
                                   const ContactGraph& graph,
                                   const ContactZones& zones, double window_s) {
    if (!(window_s > 0.0))
        throw ConfigError("detect_transfers: window must be > 0");
    TransferDetection out;
    // A wave born at a contact excites its own side of that contact before
    // its onset registers; a spontaneous wave reaches its zones only later.
    // This is the formal twin of judging transfers by propagation direction.
    auto born_at_edge = [&](const OscillationEvent& ev, int edge) {
        for (const auto& a : arrivals)
            if (a.edge == edge && a.side_marble == ev.marble &&
                a.t_s <= ev.onset_s && ev.onset_s - a.t_s <= window_s)
                return true;
        return false;
    };
    for (const auto& ev : oscillations) {
        const ZoneArrival* best = nullptr;
        double best_gap = std::numeric_limits<double>::infinity();
        int candidates = 0;
        for (const auto& a : arrivals) {
            if (a.source_wave < 0) continue;
            const ContactEdge& e = graph.edges[a.edge];
            const int other = a.side_marble == e.i ? e.j : e.i;
            if (other != ev.marble || a.side_marble == ev.marble) continue;
            const double gap = ev.onset_s - a.t_s;
            if (!(gap > 0.0 && gap <= window_s)) continue;
            // (c): the new wave must start inside this edge's zone in the target
            const auto& zone =
                ev.marble == e.i ? zones.side_i[a.edge] : zones.side_j[a.edge];
            if (std::find(zone.begin(), zone.end(), ev.origin_cell) == zone.end())
                continue;
            if (!born_at_edge(ev, a.edge)) continue;
            ++candidates;
            if (gap < best_gap) {
                best_gap = gap;
                best = &a;
            }
        }
        if (best != nullptr) {
            TransferEvent t;
            t.source_marble = best->side_marble;
            t.target_marble = ev.marble;
            t.source_wave = best->source_wave;
            t.target_wave = ev.wave_id;
            t.time_s = ev.onset_s;
            t.edge = best->edge;
            out.transfers.push_back(t);
            out.near_misses += candidates - 1;
        }
    }
    std::sort(out.transfers.begin(), out.transfers.end(),
              [](const TransferEvent& a, const TransferEvent& b) {
                  return a.time_s < b.time_s;
              });
    return out;
}

std::vector<Pathway> extract_pathways(std::span<const TransferEvent> transfers) {
    const int n = static_cast<int>(transfers.size());
    // successor links: same wave instance continues out of the target marble
    std::vector<std::vector<int>> next(n);
    std::vector<char> has_pred(n, 0);
    std::map<std::pair<int, int>, std::vector<int>> by_source;  // (marble, wave)
    for (int i = 0; i < n; ++i)
        by_source[{transfers[i].source_marble, transfers[i].source_wave}]
            .push_back(i);
    for (int i = 0; i < n; ++i) {
        const auto it =
            by_source.find({transfers[i].target_marble, transfers[i].target_wave});
        if (it == by_source.end()) continue;
        for (const int j : it->second) {
            if (j == i) continue;
            next[i].push_back(j);
            has_pred[j] = 1;
        }
    }

    std::vector<Pathway> out;
    std::vector<int> chain;
    auto emit = [&]() {
        Pathway p;
        p.transfer_ids = chain;
        p.marbles.push_back(transfers[chain.front()].source_marble);
        for (const int id : chain) p.marbles.push_back(transfers[id].target_marble);
        p.start_s = transfers[chain.front()].time_s;
        p.end_s = transfers[chain.back()].time_s;
        out.push_back(std::move(p));
    };
    // depth-first over maximal chains from the root transfers
    std::vector<std::pair<int, int>> stack;  // (transfer, next-successor slot)
    for (int r = 0; r < n; ++r) {
        if (has_pred[r]) continue;
        chain.assign(1, r);
        stack.assign(1, {r, 0});
        while (!stack.empty()) {
            auto& [cur, slot] = stack.back();
            if (slot < static_cast<int>(next[cur].size())) {
                const int nxt = next[cur][slot++];
                chain.push_back(nxt);
                stack.push_back({nxt, 0});
            } else {
                if (next[cur].empty()) emit();
                stack.pop_back();
                chain.pop_back();
            }
        }
    }
    return out;
}

ExperimentStatistics experiment_statistics(
    std::span<const OscillationEvent> oscillations,
    std::span<const TransferEvent> transfers, std::span<const Pathway> pathways,
    int n_marbles, int near_misses) {
    ExperimentStatistics s;
    s.per_marble_oscillations.assign(n_marbles, 0);
    for (const auto& ev : oscillations) {
        if (ev.marble < 0 || ev.marble >= n_marbles)
            throw std::invalid_argument("statistics: marble id out of range");
        ++s.per_marble_oscillations[ev.marble];
    }
    s.total_oscillations = static_cast<int>(oscillations.size());
    s.total_transfers = static_cast<int>(transfers.size());
    if (s.total_oscillations > 0)
        s.transfer_fraction =
            static_cast<double>(s.total_transfers) / s.total_oscillations;
    for (const auto& p : pathways)
        s.longest_pathway_marbles = std::max(
            s.longest_pathway_marbles, static_cast<int>(p.marbles.size()));
    s.near_misses = near_misses;
    if (n_marbles > 0) {
        const auto [lo, hi] =
            std::minmax_element(s.per_marble_oscillations.begin(),
                                s.per_marble_oscillations.end());
        s.quietest_marble = static_cast<int>(lo - s.per_marble_oscillations.begin());
        s.busiest_marble = static_cast<int>(hi - s.per_marble_oscillations.begin());
    }
    return s;
}

}  // namespace bzlm
