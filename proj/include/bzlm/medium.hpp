#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "bzlm/common.hpp"
#include "bzlm/kinetics.hpp"

namespace bzlm {

/// One liquid marble, modelled as the top-down disc projection of a
/// sphere-equivalent droplet (volume in microlitres equals mm^3).
struct MarbleSpec {
    double volume_ul = 50.0;
    double grid_h_mm = 0.0;
    Vec2 position_mm{};

    double diameter_mm() const { return std::cbrt(6.0 * volume_ul / M_PI); }

    /// Throws ConfigError if the grid resolves the disc with fewer than
    /// 20 cells per diameter.
    void validate() const;
};

/// Disc-masked patch of a square grid. Cells are stored compactly in
/// row-major scan order; nbr holds the W,E,S,N links with missing
/// neighbours pointing back at the cell itself (no-flux mirror).
struct DiscGrid {
    double h_mm = 0.0;
    Vec2 centre_mm{};
    double radius_mm = 0.0;

    int nx = 0, ny = 0;
    Vec2 box_origin_mm{};              // lower-left corner of the raster box
    std::vector<std::int32_t> raster;  // nx*ny -> compact index or -1
    std::vector<Vec2> pos_mm;          // compact index -> cell centre
    std::vector<std::array<std::int32_t, 4>> nbr;

    int n() const { return static_cast<int>(pos_mm.size()); }

    /// Compact index of the cell containing p, or -1 if p is outside the mask.
    int cell_at(Vec2 p) const;

    /// Compact index of the masked cell nearest to p.
    int nearest_cell(Vec2 p) const;
};

DiscGrid build_disc_mask(const MarbleSpec& spec);

/// Rectangular mask (no-flux on all sides). Used by the planar wave-speed
/// tests and the stencil benchmark; shares all machinery with disc grids.
DiscGrid build_rect_mask(double length_mm, double width_mm, double h_mm);

/// 5-point Laplacian with mirror boundary, computed in difference form so a
/// constant field maps to exactly zero.
std::vector<double> laplacian(std::span<const double> field, const DiscGrid& grid);

/// Explicit-Euler step control. Construction enforces the diffusion
/// stability bound dt <= safety * h^2 / (4 D).
class SolverParams {
public:
    SolverParams(double dt, double safety, double diffusion_dim_mm2,
                 double h_mm, bool reaction_terms = true);

    double dt() const { return dt_; }
    double safety() const { return safety_; }
    bool reaction_terms() const { return reaction_terms_; }

    /// Diffusion-only mode for conservation tests (freezes v as well).
    void set_reaction_terms(bool on) { reaction_terms_ = on; }

private:
    double dt_;
    double safety_;
    bool reaction_terms_;
};

struct MediumState {
    std::vector<double> u;
    std::vector<double> v;
    double t = 0.0;

    // scratch for the double-buffered update; managed by step()
    std::vector<double> u_back;
    std::vector<double> v_back;
};

/// Uniform state at the medium's rest point.
MediumState make_rest_state(const DiscGrid& grid, const KineticsParams& kp);

/// serial/parallel force one kernel; automatic picks parallel only for cell
/// counts where the OpenMP fork pays for itself. All three produce bitwise
/// identical fields, so the choice is pure throughput.
enum class Exec { serial, parallel, automatic };

/// Cell count above which the parallel kernel wins on typical hardware.
inline constexpr int kParallelThreshold = 16384;

namespace kernel {

/// One fused diffusion+reaction Euler update over a compact cell range.
/// phi may be null (uniform phi0) and flux may be null (no coupling).
/// Writes are per-cell independent, so the parallel version is bitwise
/// identical to the serial one.
struct Args {
    const double* u = nullptr;
    const double* v = nullptr;
    const double* phi = nullptr;
    const double* flux = nullptr;
    double* u_out = nullptr;
    double* v_out = nullptr;
    const std::array<std::int32_t, 4>* nbr = nullptr;
    int n = 0;
    double dt = 0.0;
    double diff_over_h2 = 0.0;
    double inv_epsilon = 0.0;
    double f = 0.0;
    double q = 0.0;
    double phi0 = 0.0;
    bool reactions = true;
};

void step_serial(const Args& a);
void step_parallel(const Args& a);

/// Index of the first cell holding a non-finite value (u or v) or
/// u < -1e-6, or -1 if the state is sound.
int first_bad_cell(const double* u, const double* v, int n);

}  // namespace kernel

/// Forward-Euler update of one marble:
///   u += dt (D lap u + du_dt + external_flux),  v += dt dv_dt.
/// external_flux may be empty. Throws BlowUpError naming the first offending
/// cell if the update produces a non-finite value.
void step(MediumState& state, const DiscGrid& grid, const KineticsParams& kp,
          const SolverParams& sp, std::span<const double> external_flux = {},
          Exec exec = Exec::serial, std::span<const double> phi_cell = {});

/// Silver-wire analog: u := max(u, amplitude) on masked cells within
/// radius_mm of the given cell. v untouched.
void initiate_wave(MediumState& state, const DiscGrid& grid, int centre_cell,
                   double radius_mm, double amplitude);

/// Same, centred on an arbitrary point, which must lie inside the mask.
void initiate_wave_at(MediumState& state, const DiscGrid& grid, Vec2 centre_mm,
                      double radius_mm, double amplitude);

}  // namespace bzlm
