// Benchmark: serial reference kernel vs the OpenMP kernel on one disc,
// verifying that the two produce bitwise-identical fields.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include <CLI11.hpp>

#include "bzlm/medium.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double run_steps(bzlm::MediumState& s, const bzlm::DiscGrid& g,
                 const bzlm::KineticsParams& kp, const bzlm::SolverParams& sp,
                 int steps, bzlm::Exec exec) {
    const auto t0 = Clock::now();
    for (int i = 0; i < steps; ++i) bzlm::step(s, g, kp, sp, {}, exec);
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stencil kernel benchmark: serial reference vs OpenMP"};
    int cells_per_diameter = 192;
    int steps = 400;
    int threads = 0;
    app.add_option("--div", cells_per_diameter, "cells across the disc");
    app.add_option("--steps", steps, "time steps per variant");
    app.add_option("--threads", threads, "OpenMP threads (0 = default)");
    CLI11_PARSE(app, argc, argv);
    if (threads > 0) omp_set_num_threads(threads);

    bzlm::KineticsParams kp = bzlm::KineticsParams::excitable();
    bzlm::MarbleSpec spec;
    spec.volume_ul = 50.0;
    spec.grid_h_mm = spec.diameter_mm() / cells_per_diameter;
    const bzlm::DiscGrid grid = bzlm::build_disc_mask(spec);
    const bzlm::SolverParams sp(
        std::min(5e-4, 0.9 * spec.grid_h_mm * spec.grid_h_mm /
                           (4.0 * kp.diffusion_dim())),
        0.9, kp.diffusion_dim(), spec.grid_h_mm);

    bzlm::MediumState init = bzlm::make_rest_state(grid, kp);
    bzlm::initiate_wave(init, grid, grid.nearest_cell(grid.centre_mm), 0.4, 0.8);

    bzlm::MediumState serial = init;
    bzlm::MediumState parallel = init;
    // warm-up pass so page faults and thread spin-up stay out of the timings
    run_steps(serial, grid, kp, sp, 10, bzlm::Exec::serial);
    run_steps(parallel, grid, kp, sp, 10, bzlm::Exec::parallel);

    const double t_serial = run_steps(serial, grid, kp, sp, steps, bzlm::Exec::serial);
    const double t_parallel =
        run_steps(parallel, grid, kp, sp, steps, bzlm::Exec::parallel);

    bool identical = serial.u == parallel.u && serial.v == parallel.v;

    const double updates = static_cast<double>(grid.n()) * steps;
    std::printf("disc: %d cells (d/h = %d), %d steps\n", grid.n(),
                cells_per_diameter, steps);
    std::printf("serial:   %8.3f s  (%7.2f Mcell/s)\n", t_serial,
                updates / t_serial / 1e6);
    std::printf("parallel: %8.3f s  (%7.2f Mcell/s, %d threads)\n", t_parallel,
                updates / t_parallel / 1e6, omp_get_max_threads());
    std::printf("speedup:  %.2fx\n", t_serial / t_parallel);
    std::printf("fields bitwise identical: %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
