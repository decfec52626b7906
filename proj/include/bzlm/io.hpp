#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bzlm/runner.hpp"

namespace bzlm {

struct FrameImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row 0 = top
};

/// Composite all marbles into one grayscale image at grid resolution,
/// v mapped linearly rest -> 0, pulse max -> 255. Background is 0.
FrameImage compose_frame(const std::vector<DiscGrid>& grids,
                         const std::vector<int>& offset,
                         const std::vector<double>& v, const PulseStats& ps);

void write_pgm(const std::string& path, const FrameImage& img);

std::string frame_path(const std::string& dir, int seq);

struct OutputFiles {
    std::string statistics_csv;
    std::string events_csv;
    std::string pathways_csv;
    std::string manifest;
};

/// Write the statistics CSV (one row per marble), the events CSV
/// (oscillations + transfers), the pathways CSV and the run manifest into
/// out_dir. Column orders are fixed; see README.
OutputFiles emit_outputs(const RunLog& log, const std::string& out_dir);

}  // namespace bzlm
