#include "stedge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

#include "stedge/imgproc.hpp"
#include "stedge/io.hpp"

namespace stedge::synth {

namespace {

// Smoothly interpolated lattice noise in roughly [-0.5, 0.5].
class ValueNoise {
public:
    ValueNoise(std::mt19937_64& rng, int height, int width, double spacing)
        : spacing_(spacing), cols_(static_cast<int>(width / spacing) + 2), rows_(static_cast<int>(height / spacing) + 2) {
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        lattice_.resize(static_cast<std::size_t>(cols_) * rows_);
        for (double& v : lattice_) v = u(rng);
    }

    double operator()(double y, double x) const {
        const double gy = y / spacing_;
        const double gx = x / spacing_;
        const int y0 = static_cast<int>(gy);
        const int x0 = static_cast<int>(gx);
        const double ty = smooth(gy - y0);
        const double tx = smooth(gx - x0);
        const double a = at(y0, x0) * (1 - tx) + at(y0, x0 + 1) * tx;
        const double b = at(y0 + 1, x0) * (1 - tx) + at(y0 + 1, x0 + 1) * tx;
        return a * (1 - ty) + b * ty;
    }

private:
    static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }
    double at(int y, int x) const {
        return lattice_[static_cast<std::size_t>(std::min(y, rows_ - 1)) * cols_ + std::min(x, cols_ - 1)];
    }

    double spacing_;
    int cols_;
    int rows_;
    std::vector<double> lattice_;
};

bool inside_polygon(const std::vector<std::pair<double, double>>& poly, double x, double y) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto [xi, yi] = poly[i];
        const auto [xj, yj] = poly[j];
        if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
    }
    return inside;
}

}  // namespace

BinaryEdgeMap region_boundaries(const Grid<std::int32_t>& regions) {
    const int h = regions.height();
    const int w = regions.width();
    BinaryEdgeMap out(h, w, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::int32_t r = regions(y, x);
            if ((x + 1 < w && regions(y, x + 1) != r) || (y + 1 < h && regions(y + 1, x) != r)) out(y, x) = 1;
        }
    }
    return out;
}

SynthSample generate(std::uint64_t seed, int index, const SynthConfig& cfg) {
    std::mt19937_64 rng(seed * 0x100000001B3ULL + static_cast<std::uint64_t>(index) * 0x9E3779B97F4A7C15ULL + 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    const int h = cfg.height;
    const int w = cfg.width;

    const int shapes = cfg.min_shapes + static_cast<int>(unit(rng) * (cfg.max_shapes - cfg.min_shapes + 1));
    const double scale = std::min(h, w) / 128.0;
    // Layer masks, painted back to front; layer 0 is the background.
    std::vector<FloatMap> masks;
    for (int s = 0; s < shapes; ++s) {
        FloatMap mask(h, w, 0.0);
        const double cx = uniform(0.15, 0.85) * w;
        const double cy = uniform(0.15, 0.85) * h;
        if (unit(rng) < 0.5) {
            const int n = 3 + static_cast<int>(unit(rng) * 7);
            const double radius = uniform(14.0, 40.0) * scale;
            const bool concave = unit(rng) < 0.5;
            std::vector<double> angles(n);
            for (double& a : angles) a = uniform(0.0, 2.0 * std::numbers::pi);
            std::sort(angles.begin(), angles.end());
            std::vector<std::pair<double, double>> poly;
            for (double a : angles) {
                const double r = radius * (concave ? uniform(0.45, 1.0) : 1.0);
                poly.emplace_back(cx + r * std::cos(a), cy + r * std::sin(a));
            }
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    if (inside_polygon(poly, x + 0.5, y + 0.5)) mask(y, x) = 1.0;
                }
            }
        } else {
            const double a = uniform(8.0, 34.0) * scale;
            const double b = uniform(8.0, 34.0) * scale;
            const double theta = uniform(0.0, std::numbers::pi);
            const double c = std::cos(theta);
            const double sn = std::sin(theta);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const double dx = x + 0.5 - cx;
                    const double dy = y + 0.5 - cy;
                    const double u = (c * dx + sn * dy) / a;
                    const double v = (-sn * dx + c * dy) / b;
                    if (u * u + v * v <= 1.0) mask(y, x) = 1.0;
                }
            }
        }
        masks.push_back(std::move(mask));
    }

    Grid<std::int32_t> regions(h, w, 0);
    for (int s = 0; s < shapes; ++s) {
        for (std::size_t i = 0; i < regions.size(); ++i) {
            if (masks[s][i] > 0.5) regions[i] = s + 1;
        }
    }

    // Per-layer colour, texture and boundary softness.
    struct Fill {
        double color[3];
        double amplitude;
        ValueNoise coarse;
        ValueNoise fine;
    };
    std::vector<Fill> fills;
    std::vector<double> softness;
    for (int r = 0; r <= shapes; ++r) {
        Fill f{{uniform(0.15, 0.85), uniform(0.15, 0.85), uniform(0.15, 0.85)},
               cfg.texture_amplitude * uniform(0.3, 1.5),
               ValueNoise(rng, h, w, uniform(10.0, 20.0) * scale),
               ValueNoise(rng, h, w, uniform(3.0, 6.0) * scale)};
        fills.push_back(std::move(f));
        softness.push_back(uniform(0.0, cfg.max_edge_blur) * scale);
    }
    auto layer_value = [&](int layer, int y, int x, int c) {
        const Fill& f = fills[layer];
        return f.color[c] + f.amplitude * (0.6 * f.coarse(y, x) + 0.4 * f.fine(y, x));
    };

    Image img(h, w, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = layer_value(0, y, x, c);
        }
    }
    for (int s = 0; s < shapes; ++s) {
        // Defocused shapes get a soft alpha; the boundary stays at the 0.5 level.
        const double sigma = softness[s + 1];
        const FloatMap alpha =
            sigma < 0.3 ? masks[s] : imgproc::gaussian_blur(masks[s], 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1, sigma);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double a = alpha(y, x);
                if (a <= 0.0) continue;
                for (int c = 0; c < 3; ++c) {
                    img.at(y, x, c) = (1.0 - a) * img.at(y, x, c) + a * layer_value(s + 1, y, x, c);
                }
            }
        }
    }
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (double& v : img.values()) v = std::clamp(v + noise(rng), 0.0, 1.0);
    return {std::move(img), region_boundaries(regions), std::move(regions)};
}

void write_corpus(const std::filesystem::path& out_dir, int count, std::uint64_t seed, const SynthConfig& cfg) {
    std::filesystem::create_directories(out_dir / "images");
    std::filesystem::create_directories(out_dir / "gt");
    for (int i = 0; i < count; ++i) {
        const SynthSample s = generate(seed, i, cfg);
        char name[32];
        std::snprintf(name, sizeof(name), "%04d.png", i);
        io::write_png(out_dir / "images" / name, s.image);
        io::write_png(out_dir / "gt" / name, s.boundary);
    }
}

}  // namespace stedge::synth
