#pragma once

// Classical image-processing kernels used to bootstrap and post-process
// pseudo labels. Every function is pure; intensities are on the [0,1] scale.

#include <cstdint>
#include <vector>

#include "stedge/image.hpp"

namespace stedge::imgproc {

/// Sobel response of a grayscale plane. `direction` is atan2(gy, gx).
struct GradientField {
    FloatMap gx;
    FloatMap gy;
    FloatMap magnitude;  // |gx| + |gy|
    FloatMap direction;
};

/// Canny hysteresis thresholds on the gradient-magnitude scale of a [0,1] image.
struct CannyThresholds {
    double low = 0.0;
    double high = 0.0;

    /// Thresholds quoted on the 0-255 intensity scale.
    static constexpr CannyThresholds from_255(double low255, double high255) noexcept {
        return {low255 / 255.0, high255 / 255.0};
    }
};

inline constexpr CannyThresholds kCannyHigh = CannyThresholds::from_255(200.0, 300.0);
inline constexpr CannyThresholds kCannyLow = CannyThresholds::from_255(20.0, 40.0);

struct AdaptiveBinarizeParams {
    int block_size = 33;        // odd side of the local-mean window
    double offset = 0.02;       // local threshold = mean + offset
    double global_threshold = 0.5;
};

struct ComponentLabels {
    Grid<std::int32_t> ids;           // 0 = background, components numbered from 1
    std::vector<std::size_t> sizes;   // sizes[id - 1]

    std::size_t count() const noexcept { return sizes.size(); }
};

/// ITU-R BT.601 luma. Single-channel input is returned unchanged.
Image to_grayscale(const Image& img);

/// Gaussian sigma implied by a kernel size (the OpenCV convention).
double default_gaussian_sigma(int kernel_size);

/// Normalized 1-D Gaussian taps.
std::vector<double> gaussian_kernel(int kernel_size, double sigma);

/// Separable Gaussian convolution with replicate borders. `sigma <= 0`
/// selects default_gaussian_sigma(kernel_size).
Image gaussian_blur(const Image& img, int kernel_size = 5, double sigma = 0.0);
FloatMap gaussian_blur(const FloatMap& plane, int kernel_size, double sigma);

/// Bilateral filter over a circular window of the given diameter.
/// sigma_color is on the [0,1] scale, sigma_space in pixels.
Image bilateral_filter(const Image& img, int diameter = 15, double sigma_color = 50.0 / 255.0,
                       double sigma_space = 50.0);

/// 3x3 Sobel with replicate borders.
GradientField sobel(const FloatMap& gray);

/// Canny on an image (converted to grayscale first).
BinaryEdgeMap canny(const Image& img, CannyThresholds thresholds);

/// Canny on precomputed gradients: 4-direction NMS followed by 8-connected hysteresis.
BinaryEdgeMap canny(const GradientField& gradients, CannyThresholds thresholds);

/// Quantized-direction non-maximum suppression of gradient magnitude.
/// Returns the thinned magnitude (suppressed pixels set to 0).
FloatMap gradient_nms(const GradientField& gradients);

/// Union of a local-mean threshold and a global threshold.
BinaryEdgeMap adaptive_binarize(const EdgeProbMap& prob, const AdaptiveBinarizeParams& params = {});

/// Box mean over a (block x block) window with replicate borders.
FloatMap box_mean(const FloatMap& plane, int block_size);

/// 8-connected component labeling (union-find).
ComponentLabels connected_components(const BinaryEdgeMap& bin);

/// Drop every 8-connected component with fewer than `min_size` pixels.
BinaryEdgeMap connectivity_filter(const BinaryEdgeMap& bin, std::size_t min_size = 30);

/// Element-wise logical AND.
BinaryEdgeMap hadamard_mask(const BinaryEdgeMap& a, const BinaryEdgeMap& b);

/// Bilinear resize with half-pixel centers.
Image resize_bilinear(const Image& img, int height, int width);

/// Nearest-neighbour resize for label maps.
BinaryEdgeMap resize_nearest(const BinaryEdgeMap& bin, int height, int width);

/// Binary map from prob >= threshold.
BinaryEdgeMap threshold_map(const EdgeProbMap& prob, double threshold);

}  // namespace stedge::imgproc
