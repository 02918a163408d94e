#include "stedge/smoothing.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "stedge/imgproc.hpp"

namespace stedge::smoothing {

namespace {

// FFTW planning is not thread-safe; execution with new-array functions is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class Fft2d {
public:
    Fft2d(int height, int width) : height_(height), width_(width), half_(width / 2 + 1) {
        real_ = fftw_alloc_real(static_cast<std::size_t>(height) * width);
        spec_ = fftw_alloc_complex(static_cast<std::size_t>(height) * half_);
        std::lock_guard lock(planner_mutex());
        forward_ = fftw_plan_dft_r2c_2d(height, width, real_, spec_, FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_c2r_2d(height, width, spec_, real_, FFTW_ESTIMATE);
    }
    ~Fft2d() {
        {
            std::lock_guard lock(planner_mutex());
            fftw_destroy_plan(forward_);
            fftw_destroy_plan(inverse_);
        }
        fftw_free(real_);
        fftw_free(spec_);
    }
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

    int spectrum_width() const { return half_; }

    std::vector<std::complex<double>> forward(const FloatMap& plane) {
        std::copy(plane.raw().begin(), plane.raw().end(), real_);
        fftw_execute(forward_);
        std::vector<std::complex<double>> out(static_cast<std::size_t>(height_) * half_);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = {spec_[i][0], spec_[i][1]};
        return out;
    }

    FloatMap inverse(const std::vector<std::complex<double>>& spectrum) {
        for (std::size_t i = 0; i < spectrum.size(); ++i) {
            spec_[i][0] = spectrum[i].real();
            spec_[i][1] = spectrum[i].imag();
        }
        fftw_execute(inverse_);
        FloatMap out(height_, width_);
        const double scale = 1.0 / (static_cast<double>(height_) * width_);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = real_[i] * scale;
        return out;
    }

private:
    int height_;
    int width_;
    int half_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

// Frequency responses of the periodic forward differences on the r2c half-spectrum.
struct DifferenceOperators {
    std::vector<std::complex<double>> otf_x;
    std::vector<std::complex<double>> otf_y;
    std::vector<double> power;  // |otf_x|^2 + |otf_y|^2

    DifferenceOperators(int height, int width) {
        const int half = width / 2 + 1;
        const std::size_t n = static_cast<std::size_t>(height) * half;
        otf_x.resize(n);
        otf_y.resize(n);
        power.resize(n);
        for (int l = 0; l < height; ++l) {
            const double wy = 2.0 * std::numbers::pi * l / height;
            for (int k = 0; k < half; ++k) {
                const double wx = 2.0 * std::numbers::pi * k / width;
                const std::size_t i = static_cast<std::size_t>(l) * half + k;
                otf_x[i] = std::polar(1.0, wx) - 1.0;
                otf_y[i] = std::polar(1.0, wy) - 1.0;
                power[i] = std::norm(otf_x[i]) + std::norm(otf_y[i]);
            }
        }
    }
};

FloatMap solve_with(Fft2d& fft, const DifferenceOperators& ops, const std::vector<std::complex<double>>& input_spec,
                    const FloatMap& h, const FloatMap& v, double beta) {
    const auto h_spec = fft.forward(h);
    const auto v_spec = fft.forward(v);
    std::vector<std::complex<double>> s(input_spec.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const std::complex<double> numer =
            input_spec[i] + beta * (std::conj(ops.otf_x[i]) * h_spec[i] + std::conj(ops.otf_y[i]) * v_spec[i]);
        s[i] = numer / (1.0 + beta * ops.power[i]);
    }
    return fft.inverse(s);
}

FloatMap pad_to_even(const FloatMap& plane) {
    const int h = plane.height() + (plane.height() % 2);
    const int w = plane.width() + (plane.width() % 2);
    if (h == plane.height() && w == plane.width()) return plane;
    FloatMap out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out(y, x) = plane(std::min(y, plane.height() - 1), std::min(x, plane.width() - 1));
        }
    }
    return out;
}

FloatMap crop(const FloatMap& plane, int height, int width) {
    if (plane.height() == height && plane.width() == width) return plane;
    FloatMap out(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) out(y, x) = plane(y, x);
    }
    return out;
}

}  // namespace

void L0Params::validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("L0Params: lambda must be > 0");
    if (!(kappa > 1.0)) throw std::invalid_argument("L0Params: kappa must be > 1");
    if (!(beta_max > 2.0 * lambda)) throw std::invalid_argument("L0Params: beta_max must exceed 2*lambda");
}

FloatMap forward_dx(const FloatMap& s) {
    FloatMap out(s.height(), s.width());
    for (int y = 0; y < s.height(); ++y) {
        for (int x = 0; x < s.width(); ++x) {
            out(y, x) = s(y, (x + 1) % s.width()) - s(y, x);
        }
    }
    return out;
}

FloatMap forward_dy(const FloatMap& s) {
    FloatMap out(s.height(), s.width());
    for (int y = 0; y < s.height(); ++y) {
        for (int x = 0; x < s.width(); ++x) {
            out(y, x) = s((y + 1) % s.height(), x) - s(y, x);
        }
    }
    return out;
}

double l0_objective(const FloatMap& smoothed, const FloatMap& input, double lambda, double tolerance) {
    if (!smoothed.same_shape(input)) throw std::invalid_argument("l0_objective: shape mismatch");
    const FloatMap dx = forward_dx(smoothed);
    const FloatMap dy = forward_dy(smoothed);
    double data = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double d = smoothed[i] - input[i];
        data += d * d;
        if (std::abs(dx[i]) + std::abs(dy[i]) > tolerance) ++count;
    }
    return data + lambda * static_cast<double>(count);
}

std::size_t gradient_nonzero_count(const Image& img, double tolerance) {
    std::vector<std::uint8_t> flag(img.pixel_count(), 0);
    for (int c = 0; c < img.channels(); ++c) {
        const FloatMap plane = img.channel(c);
        const FloatMap dx = forward_dx(plane);
        const FloatMap dy = forward_dy(plane);
        for (std::size_t i = 0; i < plane.size(); ++i) {
            if (std::abs(dx[i]) + std::abs(dy[i]) > tolerance) flag[i] = 1;
        }
    }
    return static_cast<std::size_t>(std::count(flag.begin(), flag.end(), 1));
}

FloatMap solve_s_subproblem(const FloatMap& input, const FloatMap& h, const FloatMap& v, double beta) {
    if (!input.same_shape(h) || !input.same_shape(v)) {
        throw std::invalid_argument("solve_s_subproblem: shape mismatch");
    }
    Fft2d fft(input.height(), input.width());
    DifferenceOperators ops(input.height(), input.width());
    return solve_with(fft, ops, fft.forward(input), h, v, beta);
}

FloatMap l0_smooth_plane(const FloatMap& plane, const L0Params& params, std::vector<L0Iteration>* trace) {
    params.validate();
    for (double v : plane.raw()) {
        if (!std::isfinite(v)) throw std::invalid_argument("l0_smooth: non-finite input");
    }
    if (plane.empty()) return plane;

    const FloatMap input = pad_to_even(plane);
    Fft2d fft(input.height(), input.width());
    const DifferenceOperators ops(input.height(), input.width());
    const auto input_spec = fft.forward(input);

    FloatMap s = input;
    FloatMap h(input.height(), input.width());
    FloatMap v(input.height(), input.width());
    for (double beta = 2.0 * params.lambda; beta < params.beta_max; beta *= params.kappa) {
        // (h, v) subproblem: per-pixel hard threshold.
        const FloatMap dx = forward_dx(s);
        const FloatMap dy = forward_dy(s);
        const double cutoff = params.lambda / beta;
        std::size_t aux_nonzero = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (dx[i] * dx[i] + dy[i] * dy[i] <= cutoff) {
                h[i] = 0.0;
                v[i] = 0.0;
            } else {
                h[i] = dx[i];
                v[i] = dy[i];
                ++aux_nonzero;
            }
        }
        s = solve_with(fft, ops, input_spec, h, v, beta);

        if (trace != nullptr) {
            L0Iteration it;
            it.beta = beta;
            const FloatMap sdx = forward_dx(s);
            const FloatMap sdy = forward_dy(s);
            for (std::size_t i = 0; i < s.size(); ++i) {
                const double d = s[i] - input[i];
                it.data_term += d * d;
                if (std::abs(sdx[i]) + std::abs(sdy[i]) > kGradientTolerance) ++it.grad_nonzero;
            }
            it.aux_nonzero = aux_nonzero;
            trace->push_back(it);
        }
    }
    return crop(s, plane.height(), plane.width());
}

Image l0_smooth(const Image& img, const L0Params& params, std::vector<L0Iteration>* trace) {
    params.validate();
    if (!img.all_finite()) throw std::invalid_argument("l0_smooth: non-finite input");
    Image out(img.height(), img.width(), img.channels());
    for (int c = 0; c < img.channels(); ++c) {
        out.set_channel(c, l0_smooth_plane(img.channel(c), params, trace));
    }
    return out;
}

Image perturb(const Image& img, const L0Params& params) {
    Image out = l0_smooth(imgproc::gaussian_blur(img, 5), params);
    out.clamp01();
    return out;
}

double patch_distance(const Image& img, int y, int x, int dy, int dx, int patch) {
    const int h = img.height();
    const int w = img.width();
    const int half = patch / 2;
    const int oy = y + dy * patch;
    const int ox = x + dx * patch;
    double sum = 0.0;
    for (int py = -half; py < patch - half; ++py) {
        const int ya = std::clamp(y + py, 0, h - 1);
        const int yb = std::clamp(oy + py, 0, h - 1);
        for (int px = -half; px < patch - half; ++px) {
            const int xa = std::clamp(x + px, 0, w - 1);
            const int xb = std::clamp(ox + px, 0, w - 1);
            for (int c = 0; c < img.channels(); ++c) {
                const double d = img.at(ya, xa, c) - img.at(yb, xb, c);
                sum += d * d;
            }
        }
    }
    return std::sqrt(sum);
}

FloatMap patch_distance_map(const Image& img, int patch) {
    if (patch < 1) throw std::invalid_argument("patch_distance_map: patch must be >= 1");
    if (patch > img.height() || patch > img.width()) {
        throw std::invalid_argument("patch_distance_map: patch larger than image");
    }
    FloatMap out(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double total = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    total += patch_distance(img, y, x, dy, dx, patch);
                }
            }
            out(y, x) = total / 8.0;
        }
    }
    return out;
}

}  // namespace stedge::smoothing
