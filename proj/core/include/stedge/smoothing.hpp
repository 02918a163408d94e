#pragma once

// L0 gradient minimization and the consistency-branch perturbation built on it.

#include <vector>

#include "stedge/image.hpp"

namespace stedge::smoothing {

struct L0Params {
    double lambda = 0.02;   // weight of the gradient-count term
    double kappa = 2.0;     // beta growth factor per outer iteration
    double beta_max = 1e5;  // stop once beta exceeds this

    /// Throws std::invalid_argument when an invariant does not hold.
    void validate() const;
};

/// Per-iteration diagnostics of one channel's solve.
struct L0Iteration {
    double beta = 0.0;
    double data_term = 0.0;          // sum (S - I)^2
    std::size_t aux_nonzero = 0;     // pixels with (h, v) != (0, 0)
    std::size_t grad_nonzero = 0;    // pixels with |dx S| + |dy S| > kGradientTolerance
};

/// Gradients below this magnitude count as zero when measuring the L0 term of a
/// floating-point solution.
inline constexpr double kGradientTolerance = 1e-4;

/// Minimizes sum (S - I)^2 + lambda * #{p : grad S_p != 0} by half-quadratic
/// splitting with an FFT screened-Poisson solve. Channels are processed
/// independently. When `trace` is given it receives one entry per outer
/// iteration of every channel, channel-major.
Image l0_smooth(const Image& img, const L0Params& params = {}, std::vector<L0Iteration>* trace = nullptr);

/// Single-channel solve on a plane whose dimensions are used as the periodic domain.
FloatMap l0_smooth_plane(const FloatMap& plane, const L0Params& params, std::vector<L0Iteration>* trace = nullptr);

/// One S-subproblem: argmin_S |S - I|^2 + beta (|dx S - h|^2 + |dy S - v|^2)
/// with periodic forward differences, solved in the frequency domain.
FloatMap solve_s_subproblem(const FloatMap& input, const FloatMap& h, const FloatMap& v, double beta);

/// Periodic forward differences.
FloatMap forward_dx(const FloatMap& s);
FloatMap forward_dy(const FloatMap& s);

/// sum (S - I)^2 + lambda * #{|dx S| + |dy S| > tolerance}.
double l0_objective(const FloatMap& smoothed, const FloatMap& input, double lambda,
                    double tolerance = kGradientTolerance);

/// Count of pixels whose periodic gradient exceeds `tolerance` in any channel.
std::size_t gradient_nonzero_count(const Image& img, double tolerance = kGradientTolerance);

/// Gaussian blur (5x5) followed by L0 smoothing, clamped to [0,1].
Image perturb(const Image& img, const L0Params& params = {});

/// Mean Euclidean distance between the patch centred at each pixel and its 8
/// neighbours one patch-stride away. Patch windows clamp at the border.
FloatMap patch_distance_map(const Image& img, int patch = 20);

/// Distance between the patch at (y, x) and the one displaced by (dy, dx) strides.
double patch_distance(const Image& img, int y, int x, int dy, int dx, int patch);

}  // namespace stedge::smoothing
