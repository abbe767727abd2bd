#include "clicktrimap/synthetic.hpp"

#include "clicktrimap/matting.hpp"
#include "clicktrimap/raster_ops.hpp"
#include "clicktrimap/util.hpp"

#include <cmath>
#include <random>

namespace clicktrimap {

namespace {

constexpr float kOpaque = 0.995f;
constexpr float kClear = 0.005f;

Rgb random_color(std::mt19937_64& rng)
{
    return Rgb{static_cast<float>(uniform01(rng)), static_cast<float>(uniform01(rng)),
               static_cast<float>(uniform01(rng))};
}

float clamp01(double v)
{
    return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

Image textured_background(std::mt19937_64& rng, int size)
{
    const Rgb c1 = random_color(rng);
    Rgb c2 = random_color(rng);
    while (color_distance(c1, c2) < 0.2) {
        c2 = random_color(rng);
    }
    const double angle = uniform01(rng) * M_PI;
    const double period = 6.0 + uniform01(rng) * 14.0;
    const double phase = uniform01(rng) * 2 * M_PI;
    const double fx = std::cos(angle) * 2 * M_PI / period;
    const double fy = std::sin(angle) * 2 * M_PI / period;
    Image bg(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double s = std::sin(fx * x + fy * y + phase);
            const double t = std::clamp(0.5 + 1.5 * s, 0.0, 1.0);
            const double n = (uniform01(rng) - 0.5) * 0.04;
            bg(x, y) = Rgb{clamp01(c1.r * (1 - t) + c2.r * t + n),
                           clamp01(c1.g * (1 - t) + c2.g * t + n),
                           clamp01(c1.b * (1 - t) + c2.b * t + n)};
        }
    }
    return bg;
}

Image foreground_layer(std::mt19937_64& rng, int size)
{
    const Rgb base = random_color(rng);
    const double gx = (uniform01(rng) - 0.5) * 0.3 / size;
    const double gy = (uniform01(rng) - 0.5) * 0.3 / size;
    Image fg(size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double shade = gx * x + gy * y + (uniform01(rng) - 0.5) * 0.03;
            fg(x, y) = Rgb{clamp01(base.r + shade), clamp01(base.g + shade), clamp01(base.b + shade)};
        }
    }
    return fg;
}

BinaryMask blob_union(std::mt19937_64& rng, int size)
{
    BinaryMask inside(size, size);
    const int blobs = 1 + static_cast<int>(rng() % 3);
    for (int b = 0; b < blobs; ++b) {
        const double cx = (0.2 + 0.6 * uniform01(rng)) * size;
        const double cy = (0.2 + 0.6 * uniform01(rng)) * size;
        const int bumps = 2 + static_cast<int>(rng() % 3);
        struct Bump
        {
            double x, y, sigma;
        };
        std::vector<Bump> field;
        for (int k = 0; k < bumps; ++k) {
            field.push_back(Bump{cx + (uniform01(rng) - 0.5) * 0.25 * size,
                                 cy + (uniform01(rng) - 0.5) * 0.25 * size,
                                 (0.05 + 0.07 * uniform01(rng)) * size});
        }
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                double f = 0.0;
                for (const Bump& p : field) {
                    const double dx = x - p.x;
                    const double dy = y - p.y;
                    f += std::exp(-(dx * dx + dy * dy) / (2 * p.sigma * p.sigma));
                }
                if (f >= 0.6) {
                    inside(x, y) = 1;
                }
            }
        }
    }
    return inside;
}

} // namespace

Trimap trimap_from_alpha(const AlphaMatte& alpha, int unknown_dilation)
{
    BinaryMask fractional(alpha.width(), alpha.height());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        fractional[i] = (alpha[i] > 0.f && alpha[i] < 1.f) ? 1 : 0;
    }
    const BinaryMask unknown = dilate(fractional, unknown_dilation);
    Trimap t(alpha.width(), alpha.height());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (unknown[i]) {
            t[i] = LabelClass::Unknown;
        } else {
            t[i] = alpha[i] >= 1.f ? LabelClass::Foreground : LabelClass::Background;
        }
    }
    return t;
}

bool satisfies_sample_invariants(const SyntheticSample& s)
{
    if (!s.image.same_shape(s.gt_alpha) || !s.image.same_shape(s.gt_trimap)) {
        return false;
    }
    for (std::size_t i = 0; i < s.gt_alpha.size(); ++i) {
        const float a = s.gt_alpha[i];
        switch (s.gt_trimap[i]) {
        case LabelClass::Foreground:
            if (a != 1.f) {
                return false;
            }
            break;
        case LabelClass::Background:
            if (a != 0.f) {
                return false;
            }
            break;
        case LabelClass::Unknown:
            break;
        }
        if (a < 0.f || a > 1.f) {
            return false;
        }
    }
    return true;
}

SyntheticSample generate_sample(std::uint64_t seed, int index, int size)
{
    if (size < 32) {
        throw InvalidInput("generate_synthetic: size must be >= 32");
    }
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(index)));

    BinaryMask inside = blob_union(rng, size);
    std::size_t area = count_true(inside);
    const std::size_t total = static_cast<std::size_t>(size) * size;
    for (int attempt = 0; attempt < 16 && (area < total / 50 || area > total * 3 / 5); ++attempt) {
        inside = blob_union(rng, size);
        area = count_true(inside);
    }
    if (area == 0) {
        inside(size / 2, size / 2) = 1;
    }

    // Signed distance to the blob boundary, positive inside.
    const auto to_outside = squared_distance_to_sites(inside, 0, false);
    const auto to_inside = squared_distance_to_sites(inside, 1, false);
    const double band = 2.0 + 4.0 * uniform01(rng);
    const double steepness = 2.0 * std::log(kOpaque / (1.0 - kOpaque)) / band;

    SyntheticSample s;
    s.id = "s" + std::to_string(index);
    s.gt_alpha = AlphaMatte(size, size);
    for (std::size_t i = 0; i < total; ++i) {
        double sd = 0.0;
        if (inside[i]) {
            sd = to_outside[i] == kNoSite ? 1e6 : std::sqrt(static_cast<double>(to_outside[i])) - 0.5;
        } else {
            sd = to_inside[i] == kNoSite ? -1e6 : 0.5 - std::sqrt(static_cast<double>(to_inside[i]));
        }
        const double a = 1.0 / (1.0 + std::exp(-steepness * sd));
        s.gt_alpha[i] = a >= kOpaque ? 1.f : (a <= kClear ? 0.f : static_cast<float>(a));
    }
    s.gt_trimap = trimap_from_alpha(s.gt_alpha, 2);

    const Image bg = textured_background(rng, size);
    const Image fg = foreground_layer(rng, size);
    s.image = composite(fg, bg, s.gt_alpha);
    return s;
}

std::vector<SyntheticSample> generate_synthetic(std::uint64_t seed, int n, int size)
{
    std::vector<SyntheticSample> out;
    out.reserve(static_cast<std::size_t>(std::max(n, 0)));
    for (int i = 0; i < n; ++i) {
        out.push_back(generate_sample(seed, i, size));
    }
    return out;
}

} // namespace clicktrimap
