#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bzlm/array.hpp"

using namespace bzlm;

namespace {

MarbleSpec marble50(int cells_per_diameter = 32) {
    MarbleSpec s;
    s.volume_ul = 50.0;
    s.grid_h_mm = s.diameter_mm() / cells_per_diameter;
    return s;
}

// Rest activator of the default excitable preset (bisection constant).
constexpr double kRestU = 0.002170272661458;

}  // namespace

TEST_CASE("ordered 4x4 at touching pitch has the lattice edge count") {
    const MarbleSpec t = marble50();
    const auto marbles = place_ordered(4, 4, t.diameter_mm(), t);
    REQUIRE(marbles.size() == 16);
    const ContactGraph g = contact_graph(marbles, 0.05, 1.0, 0.0, 1.0, 1);
    CHECK(g.edges.size() == 24);  // 2 * 4 * 3 lattice adjacencies
    for (const auto& e : g.edges) CHECK(e.k == 1.0);  // sigma 0: all at k_med
}

TEST_CASE("degenerate ordered arrays") {
    const MarbleSpec t = marble50();
    CHECK(place_ordered(1, 1, t.diameter_mm(), t).size() == 1);
    CHECK(contact_graph(place_ordered(1, 1, t.diameter_mm(), t), 0.05, 1.0, 0.0,
                        1.0, 1)
              .edges.empty());

    const auto sparse = place_ordered(4, 4, 2.0 * t.diameter_mm(), t);
    CHECK(contact_graph(sparse, 0.05, 1.0, 0.0, 1.0, 1).edges.empty());
}

TEST_CASE("disordered placement respects the overlap rule") {
    PlacementConfig cfg;
    cfg.count = 14;
    cfg.dish_radius_mm = 17.5;
    cfg.min_gap_mm = -0.1;  // slight pressing allowed
    cfg.seed = 7;
    const MarbleSpec t = marble50();
    const auto marbles = place_disordered(cfg, t);
    REQUIRE(marbles.size() == 14);
    for (std::size_t i = 0; i < marbles.size(); ++i) {
        CHECK(norm(marbles[i].position_mm) <=
              cfg.dish_radius_mm - 0.5 * t.diameter_mm() + 1e-12);
        for (std::size_t j = i + 1; j < marbles.size(); ++j) {
            const double min_d = 0.5 * (marbles[i].diameter_mm() +
                                        marbles[j].diameter_mm()) +
                                 cfg.min_gap_mm;
            CHECK(dist(marbles[i].position_mm, marbles[j].position_mm) >=
                  min_d - 1e-12);
        }
    }
}

TEST_CASE("disordered placement is deterministic per seed") {
    PlacementConfig cfg;
    cfg.count = 10;
    cfg.dish_radius_mm = 15.0;
    cfg.seed = 42;
    const MarbleSpec t = marble50();
    const auto a = place_disordered(cfg, t);
    const auto b = place_disordered(cfg, t);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].position_mm.x == b[i].position_mm.x);
        CHECK(a[i].position_mm.y == b[i].position_mm.y);
    }

    cfg.seed = 43;
    const auto c = place_disordered(cfg, t);
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i)
        same = same && a[i].position_mm.x == c[i].position_mm.x;
    CHECK_FALSE(same);
}

TEST_CASE("single marble always places inside the dish") {
    PlacementConfig cfg;
    cfg.count = 1;
    cfg.dish_radius_mm = 4.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = seed;
        const auto m = place_disordered(cfg, marble50());
        REQUIRE(m.size() == 1);
        CHECK(norm(m[0].position_mm) <= 4.0 - 0.5 * m[0].diameter_mm() + 1e-12);
    }
}

TEST_CASE("impossible packing reports the achieved count") {
    PlacementConfig cfg;
    cfg.count = 50;
    cfg.dish_radius_mm = 8.0;
    cfg.max_attempts = 5000;
    cfg.seed = 3;
    try {
        place_disordered(cfg, marble50());
        FAIL("expected PackingError");
    } catch (const PackingError& e) {
        CHECK(e.placed > 0);
        CHECK(e.placed < 50);
    }
}

TEST_CASE("two touching marbles share one edge at the tangent midpoint") {
    MarbleSpec a = marble50(), b = marble50();
    const double d = a.diameter_mm();
    a.position_mm = {0.0, 0.0};
    b.position_mm = {d, 0.0};
    const ContactGraph g = contact_graph({a, b}, 0.01, 2.0, 0.0, 0.5, 9);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].i == 0);
    CHECK(g.edges[0].j == 1);
    CHECK(g.edges[0].contact_point_mm.x == doctest::Approx(0.5 * d));
    CHECK(g.edges[0].contact_point_mm.y == doctest::Approx(0.0));
    CHECK(g.edges[0].k == 2.0);  // sigma 0 collapses the distribution
    CHECK_FALSE(g.edges[0].gate_open);
}

TEST_CASE("three collinear touching marbles have two edges") {
    MarbleSpec t = marble50();
    const double d = t.diameter_mm();
    std::vector<MarbleSpec> ms(3, t);
    ms[0].position_mm = {0.0, 0.0};
    ms[1].position_mm = {d, 0.0};
    ms[2].position_mm = {2.0 * d, 0.0};
    const ContactGraph g = contact_graph(ms, 0.01, 1.0, 0.0, 1.0, 9);
    CHECK(g.edges.size() == 2);  // no long-range 0-2 edge
}

TEST_CASE("log-normal k draws are deterministic and positive") {
    const MarbleSpec t = marble50();
    const auto marbles = place_ordered(3, 3, t.diameter_mm(), t);
    const ContactGraph a = contact_graph(marbles, 0.05, 5.0, 0.7, 1.0, 17);
    const ContactGraph b = contact_graph(marbles, 0.05, 5.0, 0.7, 1.0, 17);
    REQUIRE(a.edges.size() == b.edges.size());
    bool spread = false;
    for (std::size_t e = 0; e < a.edges.size(); ++e) {
        CHECK(a.edges[e].k == b.edges[e].k);
        CHECK(a.edges[e].k > 0.0);
        if (std::abs(a.edges[e].k - 5.0) > 0.1) spread = true;
    }
    CHECK(spread);
}

namespace {

struct TwoMarbleRig {
    ContactGraph graph;
    std::vector<DiscGrid> grids;
    ContactZones zones;
    std::vector<MediumState> states;
    std::vector<std::vector<double>> flux;

    explicit TwoMarbleRig(double k, double gap_mm = 0.0) {
        MarbleSpec a = marble50(), b = marble50();
        const double d = a.diameter_mm();
        b.position_mm = {d + gap_mm, 0.0};
        graph = contact_graph({a, b}, std::max(0.01, gap_mm + 0.01), k, 0.0, 1.0, 5);
        grids = {build_disc_mask(a), build_disc_mask(b)};
        zones = contact_zones(graph, grids, 0.45);
        const KineticsParams kp;
        states = {make_rest_state(grids[0], kp), make_rest_state(grids[1], kp)};
        flux = {std::vector<double>(grids[0].n(), 0.0),
                std::vector<double>(grids[1].n(), 0.0)};
    }
};

}  // namespace

TEST_CASE("identical states exchange nothing") {
    TwoMarbleRig rig(3.0);
    rig.graph.edges[0].gate_open = true;
    coupling_fluxes(rig.graph, rig.zones, rig.grids, rig.states, rig.flux);
    for (const auto& f : rig.flux)
        for (const double x : f) CHECK(x == 0.0);
}

TEST_CASE("k = 0 or a closed gate exchanges nothing") {
    TwoMarbleRig rig(0.0);
    rig.graph.edges[0].gate_open = true;
    for (const auto c : rig.zones.side_i[0]) rig.states[0].u[c] = 1.0;
    coupling_fluxes(rig.graph, rig.zones, rig.grids, rig.states, rig.flux);
    for (const auto& f : rig.flux)
        for (const double x : f) CHECK(x == 0.0);

    TwoMarbleRig closed(4.0);
    for (const auto c : closed.zones.side_i[0]) closed.states[0].u[c] = 1.0;
    coupling_fluxes(closed.graph, closed.zones, closed.grids, closed.states,
                    closed.flux);
    for (const auto& f : closed.flux)
        for (const double x : f) CHECK(x == 0.0);
}

TEST_CASE("excited zone against a resting zone gives the textbook flux") {
    TwoMarbleRig rig(0.5);
    rig.graph.edges[0].gate_open = true;
    for (const auto c : rig.zones.side_i[0]) rig.states[0].u[c] = 1.0;
    coupling_fluxes(rig.graph, rig.zones, rig.grids, rig.states, rig.flux);

    const double expected_total = 0.5 * (1.0 - kRestU);
    const std::size_t ni = rig.zones.side_i[0].size();
    const std::size_t nj = rig.zones.side_j[0].size();

    double total_in = 0.0, total_out = 0.0;
    for (const auto c : rig.zones.side_j[0]) {
        CHECK(rig.flux[1][c] == doctest::Approx(expected_total / nj));
        total_in += rig.flux[1][c];
    }
    for (const auto c : rig.zones.side_i[0]) {
        CHECK(rig.flux[0][c] == doctest::Approx(-expected_total / ni));
        total_out += rig.flux[0][c];
    }
    CHECK(total_in == doctest::Approx(expected_total).epsilon(1e-12));
    CHECK(total_in + total_out == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("coupling cancels globally on a packed array") {
    PlacementConfig cfg;
    cfg.count = 10;
    cfg.dish_radius_mm = 11.0;
    cfg.min_gap_mm = -0.15;
    cfg.max_attempts = 400000;
    cfg.seed = 11;
    const auto marbles = place_disordered(cfg, marble50());
    ContactGraph graph = contact_graph(marbles, 0.8, 4.0, 0.5, 1.0, 11);
    REQUIRE(graph.edges.size() > 2);
    std::vector<DiscGrid> grids;
    for (const auto& m : marbles) grids.push_back(build_disc_mask(m));
    const ContactZones zones = contact_zones(graph, grids, 0.55);

    const KineticsParams kp;
    std::vector<MediumState> states;
    std::vector<std::vector<double>> flux;
    for (const auto& g : grids) {
        states.push_back(make_rest_state(g, kp));
        flux.emplace_back(g.n(), 0.0);
    }
    // stir the fields deterministically and open every gate
    for (std::size_t m = 0; m < states.size(); ++m)
        for (int c = 0; c < grids[m].n(); ++c)
            states[m].u[c] = 0.5 + 0.5 * std::sin(0.13 * c + 1.7 * m);
    for (auto& e : graph.edges) e.gate_open = true;

    coupling_fluxes(graph, zones, grids, states, flux);
    double total = 0.0;
    bool any = false;
    for (const auto& f : flux)
        for (const double x : f) {
            total += x;
            any = any || x != 0.0;
        }
    CHECK(any);
    CHECK(std::abs(total) < 1e-12);
}

TEST_CASE("empty contact zone is a geometry error") {
    MarbleSpec a = marble50(), b = marble50();
    b.position_mm = {a.diameter_mm() + 0.8, 0.0};  // wide gap
    const ContactGraph g = contact_graph({a, b}, 1.0, 1.0, 0.0, 1.0, 2);
    REQUIRE(g.edges.size() == 1);
    std::vector<DiscGrid> grids{build_disc_mask(a), build_disc_mask(b)};
    CHECK_THROWS_AS(contact_zones(g, grids, 0.2), GeometryError);
}

TEST_CASE("gate redraws follow the episode probability") {
    MarbleSpec a = marble50(), b = marble50();
    b.position_mm = {a.diameter_mm(), 0.0};

    SUBCASE("gate_prob 1 opens every episode") {
        ContactGraph g = contact_graph({a, b}, 0.05, 1.0, 0.0, 1.0, 3);
        Rng rng(99);
        const std::vector<GateEpisode> eps(50, GateEpisode{0, 1.0});
        CHECK(update_gates(g, eps, rng) == 50);
        CHECK(g.edges[0].gate_open);
    }
    SUBCASE("gate_prob 0 never opens") {
        ContactGraph g = contact_graph({a, b}, 0.05, 1.0, 0.0, 0.0, 3);
        Rng rng(99);
        const std::vector<GateEpisode> eps(200, GateEpisode{0, 1.0});
        CHECK(update_gates(g, eps, rng) == 0);
        CHECK_FALSE(g.edges[0].gate_open);
    }
    SUBCASE("gate_prob 0.2 stays inside 3-sigma binomial bounds") {
        ContactGraph g = contact_graph({a, b}, 0.05, 1.0, 0.0, 0.2, 3);
        Rng rng(12345);
        const std::vector<GateEpisode> eps(1000, GateEpisode{0, 1.0});
        const int open = update_gates(g, eps, rng);
        const double sigma = std::sqrt(0.2 * 0.8 / 1000.0);
        CHECK(std::abs(open / 1000.0 - 0.2) <= 3.0 * sigma);
    }
}
