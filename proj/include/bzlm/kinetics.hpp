#pragma once

#include <vector>

#include "bzlm/common.hpp"

namespace bzlm {

/// Two-variable light-sensitive Oregonator constants plus the physical
/// scaling that maps dimensionless time/space onto seconds and millimetres.
struct KineticsParams {
    double epsilon = 0.04;  // timescale ratio between activator and catalyst
    double f = 1.4;         // stoichiometric factor
    double q = 0.002;       // excitability parameter
    double phi = 0.05;      // illumination / bromide production rate

    double time_unit_s = 12.0;     // seconds of physical time per dimensionless unit
    double diffusion_u = 0.0285;   // activator diffusion coefficient, mm^2/s

    /// Dimensionless activator diffusion (mm^2 per time unit) used by the solver.
    double diffusion_dim() const { return diffusion_u * time_unit_s; }

    void validate() const;

    /// Stable rest state; waves exist only when triggered.
    static KineticsParams excitable() { return {}; }

    /// Self-oscillating medium (unstable fixed point, limit cycle).
    static KineticsParams oscillatory() {
        KineticsParams p;
        p.f = 0.95;
        p.phi = 0.005;
        return p;
    }
};

struct Rates {
    double du = 0.0;
    double dv = 0.0;
};

/// Oregonator reaction terms:
///   du/dt = (u - u^2 - (f v + phi)(u - q)/(u + q)) / epsilon
///   dv/dt = u - v
Rates reaction_rates(double u, double v, const KineticsParams& p);

struct FixedPoint {
    double u = 0.0;
    double v = 0.0;
    bool stable = false;
    double trace = 0.0;  // Jacobian trace at the point
    double det = 0.0;    // Jacobian determinant
};

/// All intersections of the two nullclines (v = u) on u in [0, 1+f],
/// each tagged stable/unstable from the 2x2 Jacobian.
std::vector<FixedPoint> fixed_points(const KineticsParams& p);

/// Rest values plus the peak a single excitation pulse reaches, obtained by
/// integrating the single-cell ODE from a super-threshold perturbation.
/// Detection thresholds are derived from these.
struct PulseStats {
    double u_rest = 0.0;
    double v_rest = 0.0;
    double u_max = 0.0;
    double v_max = 0.0;
};

PulseStats pulse_stats(const KineticsParams& p);

/// Forward-Euler single-cell trajectory; the zero-diffusion reference for the
/// grid stepper and the workhorse for excitability checks.
struct CellTrajectory {
    std::vector<double> t, u, v;
};

CellTrajectory integrate_cell(const KineticsParams& p, double u0, double v0,
                              double dt, double t_end);

}  // namespace bzlm
