#include "bzlm/kinetics.hpp"

#include <algorithm>
#include <cmath>

namespace bzlm {

void KineticsParams::validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("kinetics: epsilon must be > 0");
    if (!(f > 0.0)) throw ConfigError("kinetics: f must be > 0");
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("kinetics: q must be in (0,1)");
    if (!(phi >= 0.0)) throw ConfigError("kinetics: phi must be >= 0");
    if (!(time_unit_s > 0.0)) throw ConfigError("kinetics: time_unit_s must be > 0");
    if (!(diffusion_u > 0.0)) throw ConfigError("kinetics: diffusion_u must be > 0");
}

Rates reaction_rates(double u, double v, const KineticsParams& p) {
    if (!std::isfinite(u) || !std::isfinite(v))
        throw NumericError("reaction_rates: non-finite input (solver blow-up upstream?)");
    // multiply by the reciprocal so this rounds exactly like the grid kernel
    const double inv_eps = 1.0 / p.epsilon;
    Rates r;
    r.du = (u - u * u - (p.f * v + p.phi) * (u - p.q) / (u + p.q)) * inv_eps;
    r.dv = u - v;
    if (!std::isfinite(r.du) || !std::isfinite(r.dv))
        throw NumericError("reaction_rates: non-finite rate");
    return r;
}

namespace {

// u-nullcline residual along the v = u diagonal.
double nullcline_residual(double u, const KineticsParams& p) {
    return u - u * u - (p.f * u + p.phi) * (u - p.q) / (u + p.q);
}

struct Jacobian {
    double j11, j12, j21, j22;
};

Jacobian jacobian_at(double u, double v, const KineticsParams& p) {
    const double denom = (u + p.q) * (u + p.q);
    Jacobian j;
    j.j11 = (1.0 - 2.0 * u - (p.f * v + p.phi) * 2.0 * p.q / denom) / p.epsilon;
    j.j12 = -p.f * (u - p.q) / (u + p.q) / p.epsilon;
    j.j21 = 1.0;
    j.j22 = -1.0;
    return j;
}

double bisect(double lo, double hi, const KineticsParams& p) {
    double flo = nullcline_residual(lo, p);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = nullcline_residual(mid, p);
        if (fm == 0.0) return mid;
        if ((flo > 0.0) == (fm > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::vector<FixedPoint> fixed_points(const KineticsParams& p) {
    p.validate();
    const double hi = 1.0 + p.f;
    const int n_scan = 200000;
    std::vector<FixedPoint> out;

    auto push_root = [&](double u) {
        for (const auto& fp : out)
            if (std::abs(fp.u - u) < 1e-9) return;  // dedupe
        const Jacobian j = jacobian_at(u, u, p);
        FixedPoint fp;
        fp.u = u;
        fp.v = u;
        fp.trace = j.j11 + j.j22;
        fp.det = j.j11 * j.j22 - j.j12 * j.j21;
        fp.stable = fp.trace < 0.0 && fp.det > 0.0;
        out.push_back(fp);
    };

    double u_prev = 0.0;
    double f_prev = nullcline_residual(u_prev, p);
    if (f_prev == 0.0) push_root(0.0);
    for (int i = 1; i <= n_scan; ++i) {
        const double u = hi * static_cast<double>(i) / n_scan;
        const double fu = nullcline_residual(u, p);
        if (fu == 0.0) {
            push_root(u);
        } else if ((f_prev > 0.0) != (fu > 0.0) && f_prev != 0.0) {
            push_root(bisect(u_prev, u, p));
        }
        u_prev = u;
        f_prev = fu;
    }

    if (out.empty())
        throw NumericError(
            "fixed_points: no nullcline intersection found on [0, " +
            std::to_string(hi) + "] (residual at 0: " +
            std::to_string(nullcline_residual(0.0, p)) + ", at end: " +
            std::to_string(nullcline_residual(hi, p)) + ")");
    return out;
}

CellTrajectory integrate_cell(const KineticsParams& p, double u0, double v0,
                              double dt, double t_end) {
    const int n = static_cast<int>(std::ceil(t_end / dt));
    CellTrajectory traj;
    traj.t.reserve(n + 1);
    traj.u.reserve(n + 1);
    traj.v.reserve(n + 1);
    double u = u0, v = v0;
    traj.t.push_back(0.0);
    traj.u.push_back(u);
    traj.v.push_back(v);
    for (int i = 1; i <= n; ++i) {
        const Rates r = reaction_rates(u, v, p);
        u += dt * r.du;
        v += dt * r.dv;
        traj.t.push_back(i * dt);
        traj.u.push_back(u);
        traj.v.push_back(v);
    }
    return traj;
}

PulseStats pulse_stats(const KineticsParams& p) {
    const auto fps = fixed_points(p);
    // Rest state: the stable point if there is one, otherwise the smallest-u
    // point (oscillatory media have no rest state proper; thresholds still
    // need a baseline).
    const FixedPoint* rest = nullptr;
    for (const auto& fp : fps)
        if (fp.stable && (rest == nullptr || fp.u < rest->u)) rest = &fp;
    if (rest == nullptr) rest = &fps.front();

    PulseStats s;
    s.u_rest = rest->u;
    s.v_rest = rest->v;
    const CellTrajectory traj =
        integrate_cell(p, rest->u + 0.3, rest->v, 1e-4, 30.0);
    s.u_max = *std::max_element(traj.u.begin(), traj.u.end());
    s.v_max = *std::max_element(traj.v.begin(), traj.v.end());
    return s;
}

}  // namespace bzlm
