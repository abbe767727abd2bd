#pragma once

#include "clicktrimap/core_types.hpp"

#include <optional>

namespace clicktrimap {

struct MetricReport
{
    double mse = 0.0; // 1e3 * mean squared alpha error
    double sad = 0.0; // sum of absolute alpha error / 1e3
    double mad = 0.0; // mean absolute alpha error
    std::optional<double> pixel_err; // mislabeled trimap fraction, when trimaps are given
};

/// Per-pixel I = a F + (1 - a) B.
Image composite(const Image& fg, const Image& bg, const AlphaMatte& alpha);

/// Least-squares alpha of a composited pixel given its layers; pixels where fg == bg get 0.
AlphaMatte recover_alpha(const Image& composited, const Image& fg, const Image& bg);

inline constexpr double kAlphaGeodesicLambda = 4.0;

/// Trimap-guided alpha: exact on F and B; inside U the ratio g_B / (g_F + g_B) of geodesic
/// distances to the F and B regions.
AlphaMatte estimate_alpha(const Image& img, const Trimap& t);

MetricReport compute_metrics(const AlphaMatte& pred_alpha, const AlphaMatte& gt_alpha,
                             const Trimap* pred_trimap = nullptr,
                             const Trimap* gt_trimap = nullptr);

/// Fraction of mislabeled pixels.
double trimap_pixel_error(const Trimap& pred, const Trimap& gt);

} // namespace clicktrimap
