#pragma once

#include "clicktrimap/core_types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace clicktrimap {

// Trimap PNG values: single-channel 8-bit.
inline constexpr std::uint8_t kTrimapBackground = 0;
inline constexpr std::uint8_t kTrimapUnknown = 128;
inline constexpr std::uint8_t kTrimapForeground = 255;

struct DecodedPng
{
    int width = 0;
    int height = 0;
    int channels = 0; // 1 (gray) or 3 (RGB); alpha channels and palettes are expanded/stripped
    std::vector<std::uint8_t> pixels;
};

/// Throws InvalidInput("undecodable ...") on malformed data.
DecodedPng decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(int width, int height, int channels,
                                     std::span<const std::uint8_t> pixels);

std::vector<std::uint8_t> image_to_png(const Image& img);
Image image_from_png(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> trimap_to_png(const Trimap& t);
/// Accepts exact 0/128/255 values; other gray levels map to the nearest of the three.
Trimap trimap_from_png(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> alpha_to_png(const AlphaMatte& a);
AlphaMatte alpha_from_png(std::span<const std::uint8_t> bytes);

/// Row-major run-length form {width, height, runs: [[value, length], ...]} with trimap PNG values.
nlohmann::json trimap_to_rle(const Trimap& t);
Trimap trimap_from_rle(const nlohmann::json& j);

} // namespace clicktrimap
