#include "bzlm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bzlm/config.hpp"

namespace bzlm {

namespace fs = std::filesystem;

FrameImage compose_frame(const std::vector<DiscGrid>& grids,
                         const std::vector<int>& offset,
                         const std::vector<double>& v, const PulseStats& ps) {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300, h = 0.0;
    for (const auto& g : grids) {
        x0 = std::min(x0, g.box_origin_mm.x);
        y0 = std::min(y0, g.box_origin_mm.y);
        x1 = std::max(x1, g.box_origin_mm.x + g.nx * g.h_mm);
        y1 = std::max(y1, g.box_origin_mm.y + g.ny * g.h_mm);
        h = g.h_mm;
    }
    FrameImage img;
    img.width = static_cast<int>(std::lround((x1 - x0) / h));
    img.height = static_cast<int>(std::lround((y1 - y0) / h));
    img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 0);

    const double span = ps.v_max - ps.v_rest;
    for (std::size_t m = 0; m < grids.size(); ++m) {
        const DiscGrid& g = grids[m];
        for (int c = 0; c < g.n(); ++c) {
            const Vec2 p = g.pos_mm[c];
            const int px = static_cast<int>(std::floor((p.x - x0) / h));
            const int py = static_cast<int>(std::floor((p.y - y0) / h));
            if (px < 0 || px >= img.width || py < 0 || py >= img.height) continue;
            const double val = (v[offset[m] + c] - ps.v_rest) / span;
            const int gray =
                std::clamp(static_cast<int>(std::lround(255.0 * val)), 0, 255);
            // row 0 at the top of the image
            img.pixels[static_cast<std::size_t>(img.height - 1 - py) * img.width +
                       px] = static_cast<std::uint8_t>(gray);
        }
    }
    return img;
}

void write_pgm(const std::string& path, const FrameImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimError("cannot write frame '" + path + "'");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw SimError("short write on frame '" + path + "'");
}

std::string frame_path(const std::string& dir, int seq) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.pgm", seq);
    return (fs::path(dir) / buf).string();
}

namespace {

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

std::string opt_fmt(const std::optional<double>& x) {
    return x ? fmt(*x) : std::string();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SimError("cannot write '" + path + "'");
    return out;
}

}  // namespace

OutputFiles emit_outputs(const RunLog& log, const std::string& out_dir) {
    fs::create_directories(out_dir);
    OutputFiles files;

    files.statistics_csv = (fs::path(out_dir) / "statistics.csv").string();
    {
        auto out = open_out(files.statistics_csv);
        out << "marble_id,x_mm,y_mm,diameter_mm,oscillations\n";
        for (std::size_t m = 0; m < log.marbles.size(); ++m) {
            const auto& spec = log.marbles[m];
            out << m << ',' << fmt(spec.position_mm.x) << ','
                << fmt(spec.position_mm.y) << ',' << fmt(spec.diameter_mm())
                << ',' << log.stats.per_marble_oscillations[m] << '\n';
        }
        if (!out) throw SimError("short write on " + files.statistics_csv);
    }

    files.events_csv = (fs::path(out_dir) / "events.csv").string();
    {
        auto out = open_out(files.events_csv);
        out << "kind,marble,wave,source_marble,source_wave,edge,time_s,"
               "half1_s,half2_s,origin_x_mm,origin_y_mm\n";
        for (const auto& ev : log.oscillations) {
            out << "oscillation," << ev.marble << ',' << ev.wave_id << ",,,,"
                << fmt(ev.onset_s) << ',' << opt_fmt(ev.half1_s) << ','
                << opt_fmt(ev.half2_s) << ",,\n";
        }
        for (const auto& t : log.transfers) {
            out << "transfer," << t.target_marble << ',' << t.target_wave << ','
                << t.source_marble << ',' << t.source_wave << ',' << t.edge
                << ',' << fmt(t.time_s) << ",,,,\n";
        }
        if (!out) throw SimError("short write on " + files.events_csv);
    }

    files.pathways_csv = (fs::path(out_dir) / "pathways.csv").string();
    {
        auto out = open_out(files.pathways_csv);
        out << "pathway_id,length,marbles,start_s,end_s\n";
        for (std::size_t p = 0; p < log.pathways.size(); ++p) {
            const auto& pw = log.pathways[p];
            out << p << ',' << pw.marbles.size() << ',';
            for (std::size_t i = 0; i < pw.marbles.size(); ++i) {
                if (i) out << '-';
                out << pw.marbles[i];
            }
            out << ',' << fmt(pw.start_s) << ',' << fmt(pw.end_s) << '\n';
        }
        if (!out) throw SimError("short write on " + files.pathways_csv);
    }

    files.manifest = (fs::path(out_dir) / "manifest.txt").string();
    {
        auto out = open_out(files.manifest);
        const ExperimentConfig cfg = parse_config(log.config);
        char hash[32];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(config_hash(cfg)));
        out << "build: bzmarble 0.1.0\n";
        out << "config_hash: " << hash << "\n";
        out << "seed: " << cfg.seed << "\n";
        out << "scenario: " << to_string(cfg.scenario) << "\n";
        out << "oscillations: " << log.stats.total_oscillations << "\n";
        out << "transfers: " << log.stats.total_transfers << "\n";
        if (!out) throw SimError("short write on " + files.manifest);
    }
    return files;
}

}  // namespace bzlm
