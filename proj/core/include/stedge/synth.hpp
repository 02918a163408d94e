#pragma once

// Synthetic corpus with exactly known boundaries: textured polygons and
// ellipses over a textured background, plus additive noise.

#include <cstdint>
#include <filesystem>

#include "stedge/image.hpp"

namespace stedge::synth {

struct SynthConfig {
    int height = 128;
    int width = 128;
    int min_shapes = 3;
    int max_shapes = 6;
    double texture_amplitude = 0.12;  // peak-to-peak of the value-noise fill
    double noise_sigma = 0.02;
    double max_edge_blur = 2.5;       // per-shape boundary blur sigma drawn from [0, max] pixels at 128 px
};

struct SynthSample {
    Image image;            // RGB
    BinaryEdgeMap boundary; // 1 px region boundaries
    Grid<std::int32_t> regions;
};

/// Deterministic in (seed, index, config).
SynthSample generate(std::uint64_t seed, int index, const SynthConfig& cfg = {});

/// Pixels whose region differs from the right or lower neighbour.
BinaryEdgeMap region_boundaries(const Grid<std::int32_t>& regions);

/// Writes images/NNNN.png and gt/NNNN.png for `count` samples.
void write_corpus(const std::filesystem::path& out_dir, int count, std::uint64_t seed, const SynthConfig& cfg = {});

}  // namespace stedge::synth
