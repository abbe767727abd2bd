#pragma once

#include "clicktrimap/core_types.hpp"

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

namespace clicktrimap {

using GeodesicField = Raster<double>;

struct PixelPos
{
    int x = 0;
    int y = 0;
    bool operator==(const PixelPos&) const = default;
};

BinaryMask mask_not(const BinaryMask& m);
BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);

/// Exact Euclidean distance from every true pixel to the nearest false pixel. Pixels outside
/// the raster count as false, so a lone true pixel gets 1 and an all-false mask maps to zeros.
DistanceMap distance_transform(const BinaryMask& m);

/// Squared exact distances to the nearest site pixel (sites = pixels equal to `site_value`).
/// With `border_sites` the ring just outside the raster also counts as sites. Pixels with no
/// reachable site hold kNoSite.
inline constexpr std::int64_t kNoSite = INT64_MAX;
std::vector<std::int64_t> squared_distance_to_sites(const BinaryMask& m, std::uint8_t site_value,
                                                    bool border_sites);

double max_of(const DistanceMap& d);

/// Location of the maximum; ties go to the smallest y, then the smallest x.
PixelPos argmax_pixel(const DistanceMap& d);

/// Dilation by a Euclidean disk of integer radius r (pixels within distance <= r of a true pixel).
BinaryMask dilate(const BinaryMask& m, int r);
BinaryMask erode(const BinaryMask& m, int r);

/// Shortest-path cost on the 8-connected grid; a step of length l from p to q costs
/// l * (1 + lambda * |img(p) - img(q)|).
GeodesicField geodesic_distance(const Image& img, const BinaryMask& seeds, double lambda);

double color_distance(const Rgb& a, const Rgb& b);

/// Bilinear resampling with pixel-center alignment.
Image resize_bilinear(const Image& img, int width, int height);

template <typename T>
Raster<T> resize_nearest(const Raster<T>& src, int width, int height)
{
    Raster<T> out(width, height);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(src.height() - 1,
                                static_cast<int>((y + 0.5) * src.height() / height));
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(src.width() - 1,
                                    static_cast<int>((x + 0.5) * src.width() / width));
            out(x, y) = src(sx, sy);
        }
    }
    return out;
}

/// Number of 8-connected components of true pixels.
int count_components(const BinaryMask& m);

} // namespace clicktrimap
