#include "clicktrimap/matting.hpp"

#include "clicktrimap/raster_ops.hpp"

#include <algorithm>
#include <cmath>

namespace clicktrimap {

Image composite(const Image& fg, const Image& bg, const AlphaMatte& alpha)
{
    require_same_shape(fg, bg, "composite");
    require_same_shape(fg, alpha, "composite");
    Image out(fg.width(), fg.height());
    for (std::size_t i = 0; i < fg.size(); ++i) {
        const float a = alpha[i];
        out[i] = Rgb{a * fg[i].r + (1 - a) * bg[i].r, a * fg[i].g + (1 - a) * bg[i].g,
                     a * fg[i].b + (1 - a) * bg[i].b};
    }
    return out;
}

AlphaMatte recover_alpha(const Image& composited, const Image& fg, const Image& bg)
{
    require_same_shape(composited, fg, "recover_alpha");
    require_same_shape(composited, bg, "recover_alpha");
    AlphaMatte out(fg.width(), fg.height());
    for (std::size_t i = 0; i < fg.size(); ++i) {
        const double fr = fg[i].r - static_cast<double>(bg[i].r);
        const double fgc = fg[i].g - static_cast<double>(bg[i].g);
        const double fb = fg[i].b - static_cast<double>(bg[i].b);
        const double ir = composited[i].r - static_cast<double>(bg[i].r);
        const double ig = composited[i].g - static_cast<double>(bg[i].g);
        const double ib = composited[i].b - static_cast<double>(bg[i].b);
        const double den = fr * fr + fgc * fgc + fb * fb;
        out[i] = den > 0 ? static_cast<float>((ir * fr + ig * fgc + ib * fb) / den) : 0.f;
    }
    return out;
}

AlphaMatte estimate_alpha(const Image& img, const Trimap& t)
{
    require_same_shape(img, t, "estimate_alpha");
    AlphaMatte alpha(t.width(), t.height(), 0.f);
    const BinaryMask fg = trimap_to_mask(t, LabelClass::Foreground);
    const BinaryMask bg = trimap_to_mask(t, LabelClass::Background);
    const bool has_unknown = count_label(t, LabelClass::Unknown) > 0;
    const bool has_fg = count_true(fg) > 0;
    const bool has_bg = count_true(bg) > 0;

    GeodesicField g_fg;
    GeodesicField g_bg;
    if (has_unknown && has_fg && has_bg) {
        g_fg = geodesic_distance(img, fg, kAlphaGeodesicLambda);
        g_bg = geodesic_distance(img, bg, kAlphaGeodesicLambda);
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        switch (t[i]) {
        case LabelClass::Foreground:
            alpha[i] = 1.f;
            break;
        case LabelClass::Background:
            alpha[i] = 0.f;
            break;
        case LabelClass::Unknown:
            if (!has_fg) {
                alpha[i] = 0.f;
            } else if (!has_bg) {
                alpha[i] = 1.f;
            } else {
                const double sum = g_fg[i] + g_bg[i];
                alpha[i] = static_cast<float>(std::clamp(sum > 0 ? g_bg[i] / sum : 0.5, 0.0, 1.0));
            }
            break;
        }
    }
    return alpha;
}

double trimap_pixel_error(const Trimap& pred, const Trimap& gt)
{
    return static_cast<double>(count_mismatched(pred, gt)) / static_cast<double>(gt.size());
}

MetricReport compute_metrics(const AlphaMatte& pred_alpha, const AlphaMatte& gt_alpha,
                             const Trimap* pred_trimap, const Trimap* gt_trimap)
{
    require_same_shape(pred_alpha, gt_alpha, "compute_metrics");
    double sq = 0.0;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < pred_alpha.size(); ++i) {
        const double d = static_cast<double>(pred_alpha[i]) - gt_alpha[i];
        sq += d * d;
        abs_sum += std::abs(d);
    }
    const double n = static_cast<double>(pred_alpha.size());
    MetricReport r;
    r.mse = 1e3 * sq / n;
    r.sad = abs_sum / 1e3;
    r.mad = abs_sum / n;
    if (pred_trimap != nullptr && gt_trimap != nullptr) {
        require_same_shape(*pred_trimap, pred_alpha, "compute_metrics");
        r.pixel_err = trimap_pixel_error(*pred_trimap, *gt_trimap);
    }
    return r;
}

} // namespace clicktrimap
