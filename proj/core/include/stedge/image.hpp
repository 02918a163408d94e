#pragma once

// Pixel containers shared by every stage of the pipeline.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stedge {

/// Row-major single-channel raster.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int height, int width, T fill = T{})
        : height_(height), width_(width), data_(checked_size(height, width), fill) {}
    Grid(int height, int width, std::vector<T> data) : height_(height), width_(width), data_(std::move(data)) {
        if (data_.size() != checked_size(height, width)) {
            throw std::invalid_argument("Grid: data length does not match dimensions");
        }
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int y, int x) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    const T& operator()(int y, int x) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::vector<T>& raw() noexcept { return data_; }
    const std::vector<T>& raw() const noexcept { return data_; }

    bool same_shape(const Grid& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }
    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return height_ == other.height() && width_ == other.width();
    }

    bool operator==(const Grid&) const = default;

private:
    static std::size_t checked_size(int height, int width) {
        if (height < 0 || width < 0) {
            throw std::invalid_argument("Grid: negative dimension");
        }
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

/// Per-pixel edge probability in [0,1]; one network side output.
using EdgeProbMap = Grid<double>;
/// Generic real-valued map (gradient magnitudes, distance maps, ...).
using FloatMap = Grid<double>;
/// Boolean raster stored as bytes: 1 = edge pixel.
using BinaryEdgeMap = Grid<std::uint8_t>;

/// H x W x C raster, channel-interleaved, values in [0,1].
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, double fill = 0.0);
    Image(int height, int width, int channels, std::vector<double> data);

    static Image from_plane(const FloatMap& plane);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(height_) * width_; }
    bool empty() const noexcept { return data_.empty(); }

    double& at(int y, int x, int c = 0) noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    double at(int y, int x, int c = 0) const noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    /// Copy of one channel as a plane.
    FloatMap channel(int c) const;
    void set_channel(int c, const FloatMap& plane);

    /// True when every value is finite and inside [0,1].
    bool is_valid() const noexcept;
    bool all_finite() const noexcept;
    void clamp01() noexcept;

    bool operator==(const Image&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

std::size_t count_true(const BinaryEdgeMap& map) noexcept;

/// a ⊆ b, pixelwise.
bool is_subset(const BinaryEdgeMap& a, const BinaryEdgeMap& b);

Image flip_horizontal(const Image& img);

}  // namespace stedge
