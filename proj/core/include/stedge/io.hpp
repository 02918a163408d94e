#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stedge/image.hpp"

namespace stedge::io {

/// Decode a PNG or JPEG file. Grayscale stays single-channel, everything else
/// becomes RGB; alpha is dropped.
Image read_image(const std::filesystem::path& path);

/// Decode and convert to a binary map (pixel > 127 on the first channel).
BinaryEdgeMap read_binary_map(const std::filesystem::path& path);

/// Decode a gray PNG into probabilities (value / 255).
EdgeProbMap read_prob_map(const std::filesystem::path& path);

/// 8-bit PNG, 0 or 255.
void write_png(const std::filesystem::path& path, const BinaryEdgeMap& map);

/// 8-bit PNG, round(prob * 255).
void write_png(const std::filesystem::path& path, const EdgeProbMap& prob);

/// 8-bit gray or RGB PNG, round(value * 255).
void write_png(const std::filesystem::path& path, const Image& img);

/// Image files (png/jpg/jpeg) in a directory, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace stedge::io
