#include "stedge/image.hpp"

#include <algorithm>
#include <cmath>

namespace stedge {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 1) {
        throw std::invalid_argument("Image: invalid dimensions");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image::Image(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (height < 0 || width < 0 || channels < 1) {
        throw std::invalid_argument("Image: invalid dimensions");
    }
    if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
        throw std::invalid_argument("Image: data length does not match dimensions");
    }
}

Image Image::from_plane(const FloatMap& plane) {
    return Image(plane.height(), plane.width(), 1, plane.raw());
}

FloatMap Image::channel(int c) const {
    if (c < 0 || c >= channels_) {
        throw std::out_of_range("Image::channel: index out of range");
    }
    FloatMap out(height_, width_);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = data_[i * channels_ + c];
    }
    return out;
}

void Image::set_channel(int c, const FloatMap& plane) {
    if (c < 0 || c >= channels_) {
        throw std::out_of_range("Image::set_channel: index out of range");
    }
    if (plane.height() != height_ || plane.width() != width_) {
        throw std::invalid_argument("Image::set_channel: shape mismatch");
    }
    for (std::size_t i = 0; i < plane.size(); ++i) {
        data_[i * channels_ + c] = plane[i];
    }
}

bool Image::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool Image::is_valid() const noexcept {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; });
}

void Image::clamp01() noexcept {
    for (double& v : data_) {
        v = std::clamp(v, 0.0, 1.0);
    }
}

std::size_t count_true(const BinaryEdgeMap& map) noexcept {
    return static_cast<std::size_t>(std::count_if(map.raw().begin(), map.raw().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

bool is_subset(const BinaryEdgeMap& a, const BinaryEdgeMap& b) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument("is_subset: shape mismatch");
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] && !b[i]) return false;
    }
    return true;
}

Image flip_horizontal(const Image& img) {
    Image out(img.height(), img.width(), img.channels());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < img.channels(); ++c) {
                out.at(y, img.width() - 1 - x, c) = img.at(y, x, c);
            }
        }
    }
    return out;
}

}  // namespace stedge
