#include "stedge/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace stedge::imgproc {

namespace {

int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

FloatMap convolve_separable(const FloatMap& src, const std::vector<double>& taps) {
    const int radius = static_cast<int>(taps.size()) / 2;
    const int h = src.height();
    const int w = src.width();
    FloatMap tmp(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += taps[k + radius] * src(y, clampi(x + k, 0, w - 1));
            }
            tmp(y, x) = acc;
        }
    }
    FloatMap out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                acc += taps[k + radius] * tmp(clampi(y + k, 0, h - 1), x);
            }
            out(y, x) = acc;
        }
    }
    return out;
}

// Disjoint-set forest over provisional labels.
class UnionFind {
public:
    std::int32_t make() {
        parent_.push_back(static_cast<std::int32_t>(parent_.size()));
        return parent_.back();
    }
    std::int32_t find(std::int32_t a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent_[b] = a;
        else parent_[a] = b;
    }

private:
    std::vector<std::int32_t> parent_;
};

}  // namespace

Image to_grayscale(const Image& img) {
    if (img.channels() == 1) {
        return img;
    }
    if (img.channels() != 3) {
        throw std::invalid_argument("to_grayscale: expected 1 or 3 channels, got " +
                                    std::to_string(img.channels()));
    }
    Image out(img.height(), img.width(), 1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out.at(y, x) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
        }
    }
    return out;
}

double default_gaussian_sigma(int kernel_size) {
    return 0.3 * ((kernel_size - 1) * 0.5 - 1.0) + 0.8;
}

std::vector<double> gaussian_kernel(int kernel_size, double sigma) {
    if (kernel_size < 1 || kernel_size % 2 == 0) {
        throw std::invalid_argument("gaussian_kernel: kernel size must be odd and >= 1");
    }
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    }
    const int radius = kernel_size / 2;
    std::vector<double> taps(kernel_size);
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    }
    const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (double& t : taps) t /= sum;
    return taps;
}

FloatMap gaussian_blur(const FloatMap& plane, int kernel_size, double sigma) {
    if (kernel_size < 1 || kernel_size % 2 == 0) {
        throw std::invalid_argument("gaussian_blur: kernel size must be odd and >= 1");
    }
    if (kernel_size == 1) {
        return plane;
    }
    if (sigma <= 0.0) {
        sigma = default_gaussian_sigma(kernel_size);
    }
    return convolve_separable(plane, gaussian_kernel(kernel_size, sigma));
}

Image gaussian_blur(const Image& img, int kernel_size, double sigma) {
    if (kernel_size < 1 || kernel_size % 2 == 0) {
        throw std::invalid_argument("gaussian_blur: kernel size must be odd and >= 1");
    }
    Image out(img.height(), img.width(), img.channels());
    for (int c = 0; c < img.channels(); ++c) {
        out.set_channel(c, gaussian_blur(img.channel(c), kernel_size, sigma));
    }
    return out;
}

Image bilateral_filter(const Image& img, int diameter, double sigma_color, double sigma_space) {
    if (diameter < 1 || diameter % 2 == 0) {
        throw std::invalid_argument("bilateral_filter: diameter must be odd and >= 1");
    }
    if (!(sigma_color > 0.0) || !(sigma_space > 0.0)) {
        throw std::invalid_argument("bilateral_filter: sigmas must be positive");
    }
    const int radius = diameter / 2;
    const int h = img.height();
    const int w = img.width();
    const int ch = img.channels();

    struct Tap {
        int dy, dx;
        double weight;
    };
    std::vector<Tap> taps;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const double r2 = dy * dy + dx * dx;
            if (r2 > radius * radius) continue;
            taps.push_back({dy, dx, std::exp(-r2 / (2.0 * sigma_space * sigma_space))});
        }
    }
    const double color_coeff = -1.0 / (2.0 * sigma_color * sigma_color);

    Image out(h, w, ch);
    std::vector<double> acc(ch);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::fill(acc.begin(), acc.end(), 0.0);
            double norm = 0.0;
            for (const Tap& t : taps) {
                const int yy = clampi(y + t.dy, 0, h - 1);
                const int xx = clampi(x + t.dx, 0, w - 1);
                double d2 = 0.0;
                for (int c = 0; c < ch; ++c) {
                    const double d = img.at(yy, xx, c) - img.at(y, x, c);
                    d2 += d * d;
                }
                const double wgt = t.weight * std::exp(d2 * color_coeff);
                norm += wgt;
                for (int c = 0; c < ch; ++c) acc[c] += wgt * img.at(yy, xx, c);
            }
            for (int c = 0; c < ch; ++c) out.at(y, x, c) = acc[c] / norm;
        }
    }
    return out;
}

GradientField sobel(const FloatMap& gray) {
    const int h = gray.height();
    const int w = gray.width();
    GradientField g{FloatMap(h, w), FloatMap(h, w), FloatMap(h, w), FloatMap(h, w)};
    for (int y = 0; y < h; ++y) {
        const int ym = clampi(y - 1, 0, h - 1);
        const int yp = clampi(y + 1, 0, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = clampi(x - 1, 0, w - 1);
            const int xp = clampi(x + 1, 0, w - 1);
            const double gx = (gray(ym, xp) + 2.0 * gray(y, xp) + gray(yp, xp)) -
                              (gray(ym, xm) + 2.0 * gray(y, xm) + gray(yp, xm));
            const double gy = (gray(yp, xm) + 2.0 * gray(yp, x) + gray(yp, xp)) -
                              (gray(ym, xm) + 2.0 * gray(ym, x) + gray(ym, xp));
            g.gx(y, x) = gx;
            g.gy(y, x) = gy;
            g.magnitude(y, x) = std::abs(gx) + std::abs(gy);
            g.direction(y, x) = std::atan2(gy, gx);
        }
    }
    return g;
}

FloatMap gradient_nms(const GradientField& gradients) {
    const FloatMap& mag = gradients.magnitude;
    const int h = mag.height();
    const int w = mag.width();
    auto at = [&](int y, int x) -> double {
        if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
        return mag(y, x);
    };
    FloatMap out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double m = mag(y, x);
            if (m <= 0.0) continue;
            // Fold the direction into [0, pi) and pick one of four bins.
            double angle = gradients.direction(y, x);
            if (angle < 0.0) angle += std::numbers::pi;
            const double deg = angle * 180.0 / std::numbers::pi;
            int dy1, dx1;
            if (deg < 22.5 || deg >= 157.5) {
                dy1 = 0, dx1 = -1;
            } else if (deg < 67.5) {
                dy1 = -1, dx1 = -1;
            } else if (deg < 112.5) {
                dy1 = -1, dx1 = 0;
            } else {
                dy1 = -1, dx1 = 1;
            }
            // Strict on the leading neighbour, non-strict on the trailing one.
            if (m > at(y + dy1, x + dx1) && m >= at(y - dy1, x - dx1)) {
                out(y, x) = m;
            }
        }
    }
    return out;
}

BinaryEdgeMap canny(const GradientField& gradients, CannyThresholds thresholds) {
    if (thresholds.low < 0.0 || thresholds.low > thresholds.high) {
        throw std::invalid_argument("canny: require 0 <= low <= high");
    }
    const FloatMap thin = gradient_nms(gradients);
    const int h = thin.height();
    const int w = thin.width();
    BinaryEdgeMap edges(h, w, 0);
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (thin(y, x) > 0.0 && thin(y, x) >= thresholds.high && !edges(y, x)) {
                edges(y, x) = 1;
                stack.emplace_back(y, x);
            }
        }
    }
    while (!stack.empty()) {
        const auto [y, x] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int yy = y + dy;
                const int xx = x + dx;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w || edges(yy, xx)) continue;
                if (thin(yy, xx) > 0.0 && thin(yy, xx) >= thresholds.low) {
                    edges(yy, xx) = 1;
                    stack.emplace_back(yy, xx);
                }
            }
        }
    }
    return edges;
}

BinaryEdgeMap canny(const Image& img, CannyThresholds thresholds) {
    if (thresholds.low < 0.0 || thresholds.low > thresholds.high) {
        throw std::invalid_argument("canny: require 0 <= low <= high");
    }
    const Image gray = to_grayscale(img);
    return canny(sobel(gray.channel(0)), thresholds);
}

FloatMap box_mean(const FloatMap& plane, int block_size) {
    if (block_size < 1 || block_size % 2 == 0) {
        throw std::invalid_argument("box_mean: block size must be odd and >= 1");
    }
    const int h = plane.height();
    const int w = plane.width();
    const int r = block_size / 2;
    // Integral image over the replicate-padded plane.
    const int ph = h + 2 * r;
    const int pw = w + 2 * r;
    std::vector<double> integral(static_cast<std::size_t>(ph + 1) * (pw + 1), 0.0);
    auto I = [&](int y, int x) -> double& { return integral[static_cast<std::size_t>(y) * (pw + 1) + x]; };
    for (int y = 0; y < ph; ++y) {
        double row = 0.0;
        const int sy = clampi(y - r, 0, h - 1);
        for (int x = 0; x < pw; ++x) {
            row += plane(sy, clampi(x - r, 0, w - 1));
            I(y + 1, x + 1) = I(y, x + 1) + row;
        }
    }
    FloatMap out(h, w);
    const double area = static_cast<double>(block_size) * block_size;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double s = I(y + block_size, x + block_size) - I(y, x + block_size) -
                             I(y + block_size, x) + I(y, x);
            out(y, x) = s / area;
        }
    }
    return out;
}

BinaryEdgeMap adaptive_binarize(const EdgeProbMap& prob, const AdaptiveBinarizeParams& params) {
    const FloatMap mean = box_mean(prob, params.block_size);
    BinaryEdgeMap out(prob.height(), prob.width(), 0);
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const bool local = prob[i] > mean[i] + params.offset;
        const bool global = prob[i] > params.global_threshold;
        out[i] = (local || global) ? 1 : 0;
    }
    return out;
}

ComponentLabels connected_components(const BinaryEdgeMap& bin) {
    const int h = bin.height();
    const int w = bin.width();
    Grid<std::int32_t> provisional(h, w, -1);
    UnionFind uf;
    // First pass: provisional labels, merging with the already-visited half of the 8-neighbourhood.
    constexpr int kPrior[4][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!bin(y, x)) continue;
            std::int32_t label = -1;
            for (const auto& d : kPrior) {
                const int yy = y + d[0];
                const int xx = x + d[1];
                if (yy < 0 || xx < 0 || xx >= w) continue;
                const std::int32_t n = provisional(yy, xx);
                if (n < 0) continue;
                if (label < 0) label = n;
                else uf.unite(label, n);
            }
            provisional(y, x) = label < 0 ? uf.make() : label;
        }
    }
    // Second pass: dense ids in raster order of first appearance.
    ComponentLabels result{Grid<std::int32_t>(h, w, 0), {}};
    std::vector<std::int32_t> dense;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::int32_t p = provisional(y, x);
            if (p < 0) continue;
            const std::int32_t root = uf.find(p);
            if (static_cast<std::size_t>(root) >= dense.size()) dense.resize(root + 1, 0);
            if (dense[root] == 0) {
                result.sizes.push_back(0);
                dense[root] = static_cast<std::int32_t>(result.sizes.size());
            }
            result.ids(y, x) = dense[root];
            ++result.sizes[dense[root] - 1];
        }
    }
    return result;
}

BinaryEdgeMap connectivity_filter(const BinaryEdgeMap& bin, std::size_t min_size) {
    if (min_size == 0) return bin;
    const ComponentLabels labels = connected_components(bin);
    BinaryEdgeMap out(bin.height(), bin.width(), 0);
    for (std::size_t i = 0; i < bin.size(); ++i) {
        const std::int32_t id = labels.ids[i];
        if (id > 0 && labels.sizes[id - 1] >= min_size) out[i] = 1;
    }
    return out;
}

BinaryEdgeMap hadamard_mask(const BinaryEdgeMap& a, const BinaryEdgeMap& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("hadamard_mask: dimension mismatch");
    }
    BinaryEdgeMap out(a.height(), a.width(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = (a[i] && b[i]) ? 1 : 0;
    }
    return out;
}

Image resize_bilinear(const Image& img, int height, int width) {
    if (height <= 0 || width <= 0) {
        throw std::invalid_argument("resize_bilinear: target size must be positive");
    }
    if (height == img.height() && width == img.width()) return img;
    Image out(height, width, img.channels());
    const double sy = static_cast<double>(img.height()) / height;
    const double sx = static_cast<double>(img.width()) / width;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const double ay = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width() - 1);
            const double ax = fx - x0;
            for (int c = 0; c < img.channels(); ++c) {
                const double top = (1 - ax) * img.at(y0, x0, c) + ax * img.at(y0, x1, c);
                const double bot = (1 - ax) * img.at(y1, x0, c) + ax * img.at(y1, x1, c);
                out.at(y, x, c) = (1 - ay) * top + ay * bot;
            }
        }
    }
    return out;
}

BinaryEdgeMap resize_nearest(const BinaryEdgeMap& bin, int height, int width) {
    if (height <= 0 || width <= 0) {
        throw std::invalid_argument("resize_nearest: target size must be positive");
    }
    if (height == bin.height() && width == bin.width()) return bin;
    BinaryEdgeMap out(height, width, 0);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(static_cast<int>((y + 0.5) * bin.height() / height), bin.height() - 1);
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(static_cast<int>((x + 0.5) * bin.width() / width), bin.width() - 1);
            out(y, x) = bin(sy, sx);
        }
    }
    return out;
}

BinaryEdgeMap threshold_map(const EdgeProbMap& prob, double threshold) {
    BinaryEdgeMap out(prob.height(), prob.width(), 0);
    for (std::size_t i = 0; i < prob.size(); ++i) {
        out[i] = prob[i] >= threshold ? 1 : 0;
    }
    return out;
}

}  // namespace stedge::imgproc
