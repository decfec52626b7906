#include "bzlm/medium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bzlm {

void MarbleSpec::validate() const {
    if (!(volume_ul > 0.0)) throw ConfigError("marble: volume_ul must be > 0");
    if (!(grid_h_mm > 0.0)) throw ConfigError("marble: grid_h_mm must be > 0");
    const double ratio = diameter_mm() / grid_h_mm;
    if (ratio < 20.0) {
        std::ostringstream os;
        os << "marble: resolution d/h = " << ratio
           << " below the minimum of 20 (d = " << diameter_mm()
           << " mm, h = " << grid_h_mm << " mm)";
        throw ConfigError(os.str());
    }
}

namespace {

DiscGrid finish_grid(DiscGrid g, const std::vector<char>& inside) {
    g.raster.assign(static_cast<std::size_t>(g.nx) * g.ny, -1);
    std::int32_t next = 0;
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const std::size_t r = static_cast<std::size_t>(iy) * g.nx + ix;
            if (inside[r]) g.raster[r] = next++;
        }
    g.pos_mm.resize(next);
    g.nbr.resize(next);
    const double cx = g.box_origin_mm.x + 0.5 * g.nx * g.h_mm;
    const double cy = g.box_origin_mm.y + 0.5 * g.ny * g.h_mm;
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const std::size_t r = static_cast<std::size_t>(iy) * g.nx + ix;
            const std::int32_t c = g.raster[r];
            if (c < 0) continue;
            // offsets from the box centre, antisymmetric under mirror
            g.pos_mm[c] = {cx + ((ix + 0.5) - 0.5 * g.nx) * g.h_mm,
                           cy + ((iy + 0.5) - 0.5 * g.ny) * g.h_mm};
            auto link = [&](int jx, int jy) -> std::int32_t {
                if (jx < 0 || jx >= g.nx || jy < 0 || jy >= g.ny) return c;
                const std::int32_t o =
                    g.raster[static_cast<std::size_t>(jy) * g.nx + jx];
                return o < 0 ? c : o;  // mirror: missing neighbour = self
            };
            g.nbr[c] = {link(ix - 1, iy), link(ix + 1, iy), link(ix, iy - 1),
                        link(ix, iy + 1)};
        }
    return g;
}

}  // namespace

DiscGrid build_disc_mask(const MarbleSpec& spec) {
    spec.validate();
    DiscGrid g;
    g.h_mm = spec.grid_h_mm;
    g.centre_mm = spec.position_mm;
    g.radius_mm = 0.5 * spec.diameter_mm();

    int nx = static_cast<int>(std::ceil(2.0 * g.radius_mm / g.h_mm));
    if (nx * g.h_mm < 2.0 * g.radius_mm) ++nx;
    g.nx = g.ny = nx;
    // box centred on the marble so the mask is mirror-symmetric
    g.box_origin_mm = {g.centre_mm.x - 0.5 * nx * g.h_mm,
                       g.centre_mm.y - 0.5 * nx * g.h_mm};

    std::vector<char> inside(static_cast<std::size_t>(nx) * nx, 0);
    const double r2 = g.radius_mm * g.radius_mm;
    for (int iy = 0; iy < nx; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            // half-integer offsets times h: exactly antisymmetric under mirror
            const double dx = ((ix + 0.5) - 0.5 * nx) * g.h_mm;
            const double dy = ((iy + 0.5) - 0.5 * nx) * g.h_mm;
            if (dx * dx + dy * dy <= r2)
                inside[static_cast<std::size_t>(iy) * nx + ix] = 1;
        }
    return finish_grid(std::move(g), inside);
}

DiscGrid build_rect_mask(double length_mm, double width_mm, double h_mm) {
    if (!(length_mm > 0.0 && width_mm > 0.0 && h_mm > 0.0))
        throw ConfigError("rect mask: dimensions must be positive");
    DiscGrid g;
    g.h_mm = h_mm;
    g.nx = std::max(1, static_cast<int>(std::lround(length_mm / h_mm)));
    g.ny = std::max(1, static_cast<int>(std::lround(width_mm / h_mm)));
    g.box_origin_mm = {0.0, 0.0};
    g.centre_mm = {0.5 * g.nx * h_mm, 0.5 * g.ny * h_mm};
    g.radius_mm = 0.5 * std::hypot(g.nx * h_mm, g.ny * h_mm);
    std::vector<char> inside(static_cast<std::size_t>(g.nx) * g.ny, 1);
    return finish_grid(std::move(g), inside);
}

int DiscGrid::cell_at(Vec2 p) const {
    const int ix = static_cast<int>(std::floor((p.x - box_origin_mm.x) / h_mm));
    const int iy = static_cast<int>(std::floor((p.y - box_origin_mm.y) / h_mm));
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return -1;
    return raster[static_cast<std::size_t>(iy) * nx + ix];
}

int DiscGrid::nearest_cell(Vec2 p) const {
    const int direct = cell_at(p);
    if (direct >= 0) return direct;
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int c = 0; c < n(); ++c) {
        const Vec2 d = pos_mm[c] - p;
        const double d2 = dot(d, d);
        if (d2 < best_d2) {
            best_d2 = d2;
            best = c;
        }
    }
    return best;
}

std::vector<double> laplacian(std::span<const double> field, const DiscGrid& grid) {
    if (static_cast<int>(field.size()) != grid.n())
        throw GeometryError("laplacian: field size does not match mask");
    std::vector<double> out(field.size());
    const double inv_h2 = 1.0 / (grid.h_mm * grid.h_mm);
    for (int c = 0; c < grid.n(); ++c) {
        const auto& nb = grid.nbr[c];
        const double uc = field[c];
        out[c] = ((field[nb[0]] - uc) + (field[nb[1]] - uc) +
                  (field[nb[2]] - uc) + (field[nb[3]] - uc)) *
                 inv_h2;
    }
    return out;
}

SolverParams::SolverParams(double dt, double safety, double diffusion_dim_mm2,
                           double h_mm, bool reaction_terms)
    : dt_(dt), safety_(safety), reaction_terms_(reaction_terms) {
    if (!(dt > 0.0)) throw ConfigError("solver: dt must be > 0");
    if (!(safety > 0.0 && safety <= 1.0))
        throw ConfigError("solver: safety factor must be in (0,1]");
    if (!(diffusion_dim_mm2 > 0.0) || !(h_mm > 0.0))
        throw ConfigError("solver: diffusion and h must be > 0");
    const double bound = safety * h_mm * h_mm / (4.0 * diffusion_dim_mm2);
    if (dt > bound) {
        std::ostringstream os;
        os << "solver: dt = " << dt << " violates the diffusion stability bound "
           << bound << " (= " << safety << " * h^2 / (4 D), h = " << h_mm
           << " mm, D = " << diffusion_dim_mm2 << " mm^2/unit)";
        throw ConfigError(os.str());
    }
}

MediumState make_rest_state(const DiscGrid& grid, const KineticsParams& kp) {
    const PulseStats ps = pulse_stats(kp);
    MediumState s;
    s.u.assign(grid.n(), ps.u_rest);
    s.v.assign(grid.n(), ps.v_rest);
    return s;
}

namespace kernel {

namespace {

inline void update_cell(const Args& a, int i) {
    const double uc = a.u[i];
    const auto& nb = a.nbr[i];
    const double lap = (a.u[nb[0]] - uc) + (a.u[nb[1]] - uc) +
                       (a.u[nb[2]] - uc) + (a.u[nb[3]] - uc);
    double du = a.diff_over_h2 * lap;
    double dv = 0.0;
    if (a.reactions) {
        const double vc = a.v[i];
        const double ph = a.phi ? a.phi[i] : a.phi0;
        du += (uc - uc * uc - (a.f * vc + ph) * (uc - a.q) / (uc + a.q)) *
              a.inv_epsilon;
        dv = uc - vc;
    }
    if (a.flux) du += a.flux[i];
    a.u_out[i] = uc + a.dt * du;
    a.v_out[i] = a.v[i] + a.dt * dv;
}

}  // namespace

void step_serial(const Args& a) {
    for (int i = 0; i < a.n; ++i) update_cell(a, i);
}

void step_parallel(const Args& a) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.n; ++i) update_cell(a, i);
}

int first_bad_cell(const double* u, const double* v, int n) {
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(u[i]) || !std::isfinite(v[i]) || u[i] < -1e-6)
            return i;
    }
    return -1;
}

}  // namespace kernel

void step(MediumState& state, const DiscGrid& grid, const KineticsParams& kp,
          const SolverParams& sp, std::span<const double> external_flux,
          Exec exec, std::span<const double> phi_cell) {
    const int n = grid.n();
    if (static_cast<int>(state.u.size()) != n ||
        static_cast<int>(state.v.size()) != n)
        throw GeometryError("step: state size does not match mask");
    if (!external_flux.empty() && static_cast<int>(external_flux.size()) != n)
        throw GeometryError("step: external_flux size does not match mask");
    if (!phi_cell.empty() && static_cast<int>(phi_cell.size()) != n)
        throw GeometryError("step: phi_cell size does not match mask");

    state.u_back.resize(n);
    state.v_back.resize(n);

    kernel::Args a;
    a.u = state.u.data();
    a.v = state.v.data();
    a.phi = phi_cell.empty() ? nullptr : phi_cell.data();
    a.flux = external_flux.empty() ? nullptr : external_flux.data();
    a.u_out = state.u_back.data();
    a.v_out = state.v_back.data();
    a.nbr = grid.nbr.data();
    a.n = n;
    a.dt = sp.dt();
    a.diff_over_h2 = kp.diffusion_dim() / (grid.h_mm * grid.h_mm);
    a.inv_epsilon = 1.0 / kp.epsilon;
    a.f = kp.f;
    a.q = kp.q;
    a.phi0 = kp.phi;
    a.reactions = sp.reaction_terms();

    const bool parallel =
        exec == Exec::parallel ||
        (exec == Exec::automatic && n >= kParallelThreshold);
    if (parallel)
        kernel::step_parallel(a);
    else
        kernel::step_serial(a);

    const int bad = kernel::first_bad_cell(a.u_out, a.v_out, n);
    if (bad >= 0) {
        std::ostringstream os;
        os << "solver blow-up at t = " << state.t + sp.dt() << ": cell " << bad
           << " at (" << grid.pos_mm[bad].x << ", " << grid.pos_mm[bad].y
           << ") mm, u = " << state.u_back[bad] << ", v = " << state.v_back[bad];
        throw BlowUpError(os.str());
    }

    state.u.swap(state.u_back);
    state.v.swap(state.v_back);
    state.t += sp.dt();
}

void initiate_wave(MediumState& state, const DiscGrid& grid, int centre_cell,
                   double radius_mm, double amplitude) {
    if (centre_cell < 0 || centre_cell >= grid.n())
        throw std::invalid_argument(
            "initiate_wave: centre cell outside the mask");
    initiate_wave_at(state, grid, grid.pos_mm[centre_cell], radius_mm, amplitude);
}

void initiate_wave_at(MediumState& state, const DiscGrid& grid, Vec2 centre_mm,
                      double radius_mm, double amplitude) {
    if (grid.cell_at(centre_mm) < 0)
        throw std::invalid_argument("initiate_wave: centre outside the mask");
    if (!(amplitude > 0.0))
        throw std::invalid_argument("initiate_wave: amplitude must be > 0");
    const double r2 = radius_mm * radius_mm;
    for (int i = 0; i < grid.n(); ++i) {
        const Vec2 d = grid.pos_mm[i] - centre_mm;
        if (dot(d, d) <= r2) state.u[i] = std::max(state.u[i], amplitude);
    }
}

}  // namespace bzlm
