#include "clicktrimap/raster_ops.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <queue>

namespace clicktrimap {

BinaryMask mask_not(const BinaryMask& m)
{
    BinaryMask out(m.width(), m.height());
    for (std::size_t i = 0; i < m.size(); ++i) {
        out[i] = m[i] ? 0 : 1;
    }
    return out;
}

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b)
{
    require_same_shape(a, b, "mask_and");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = (a[i] && b[i]) ? 1 : 0;
    }
    return out;
}

BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b)
{
    require_same_shape(a, b, "mask_or");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = (a[i] || b[i]) ? 1 : 0;
    }
    return out;
}

namespace {

// Breakpoint between two parabolas of the lower envelope, kept as an exact fraction
// num/den (den > 0) so that envelope decisions never suffer rounding.
struct Breakpoint
{
    int infinite = 0; // -1: -inf, +1: +inf, 0: finite
    std::int64_t num = 0;
    std::int64_t den = 1;
};

// a <= b
bool breakpoint_le(const Breakpoint& a, const Breakpoint& b)
{
    if (a.infinite < 0 || b.infinite > 0) {
        return true;
    }
    if (a.infinite > 0 || b.infinite < 0) {
        return false;
    }
    return a.num * b.den <= b.num * a.den;
}

// breakpoint < x
bool breakpoint_lt(const Breakpoint& a, std::int64_t x)
{
    if (a.infinite != 0) {
        return a.infinite < 0;
    }
    return a.num < x * a.den;
}

Breakpoint intersect(std::int64_t v, std::int64_t fv, std::int64_t q, std::int64_t fq)
{
    // q > v always
    return Breakpoint{0, (fq + q * q) - (fv + v * v), 2 * (q - v)};
}

// One-dimensional squared distance transform over positions [lo, hi) where f holds
// finite costs at sites and kNoSite elsewhere. Positions map to f[pos - lo].
void envelope_1d(const std::vector<std::int64_t>& f, std::int64_t lo, std::int64_t out_lo,
                 std::int64_t out_n, std::vector<std::int64_t>& out,
                 std::vector<std::int64_t>& v, std::vector<Breakpoint>& z)
{
    v.clear();
    z.clear();
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == kNoSite) {
            continue;
        }
        const std::int64_t q = lo + static_cast<std::int64_t>(i);
        if (v.empty()) {
            v.push_back(q);
            z.push_back(Breakpoint{-1, 0, 1});
            continue;
        }
        Breakpoint s;
        while (true) {
            const std::int64_t top = v.back();
            s = intersect(top, f[static_cast<std::size_t>(top - lo)], q, f[i]);
            if (v.size() > 1 && breakpoint_le(s, z.back())) {
                v.pop_back();
                z.pop_back();
                continue;
            }
            break;
        }
        v.push_back(q);
        z.push_back(s);
    }

    out.assign(static_cast<std::size_t>(out_n), kNoSite);
    if (v.empty()) {
        return;
    }
    std::size_t k = 0;
    for (std::int64_t x = out_lo; x < out_lo + out_n; ++x) {
        while (k + 1 < v.size() && breakpoint_lt(z[k + 1], x)) {
            ++k;
        }
        const std::int64_t d = x - v[k];
        out[static_cast<std::size_t>(x - out_lo)] = d * d + f[static_cast<std::size_t>(v[k] - lo)];
    }
}

} // namespace

std::vector<std::int64_t> squared_distance_to_sites(const BinaryMask& m, std::uint8_t site_value,
                                                    bool border_sites)
{
    const int w = m.width();
    const int h = m.height();
    const std::uint8_t site = site_value ? 1 : 0;

    // Column pass: squared vertical distance to the nearest site in the same column.
    std::vector<std::int64_t> col(static_cast<std::size_t>(w) * h, kNoSite);
    for (int x = 0; x < w; ++x) {
        std::int64_t last = border_sites ? -1 : std::numeric_limits<std::int64_t>::min();
        std::vector<std::int64_t> down(static_cast<std::size_t>(h));
        for (int y = 0; y < h; ++y) {
            if ((m(x, y) ? 1 : 0) == site) {
                last = y;
            }
            down[static_cast<std::size_t>(y)] =
                last == std::numeric_limits<std::int64_t>::min() ? kNoSite : y - last;
        }
        std::int64_t next = border_sites ? h : std::numeric_limits<std::int64_t>::max();
        for (int y = h - 1; y >= 0; --y) {
            if ((m(x, y) ? 1 : 0) == site) {
                next = y;
            }
            std::int64_t best = down[static_cast<std::size_t>(y)];
            if (next != std::numeric_limits<std::int64_t>::max()) {
                best = std::min(best, next - y);
            }
            col[m.index(x, y)] = best == kNoSite ? kNoSite : best * best;
        }
    }

    // Row pass: lower envelope of parabolas rooted at each column's vertical distance.
    std::vector<std::int64_t> result(col.size(), kNoSite);
    const std::int64_t lo = border_sites ? -1 : 0;
    const std::size_t n = static_cast<std::size_t>(w) + (border_sites ? 2 : 0);
    std::vector<std::int64_t> f(n);
    std::vector<std::int64_t> out;
    std::vector<std::int64_t> v;
    std::vector<Breakpoint> z;
    for (int y = 0; y < h; ++y) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::int64_t x = lo + static_cast<std::int64_t>(i);
            f[i] = (x < 0 || x >= w) ? 0 : col[m.index(static_cast<int>(x), y)];
        }
        envelope_1d(f, lo, 0, w, out, v, z);
        std::copy(out.begin(), out.end(), result.begin() + static_cast<std::ptrdiff_t>(m.index(0, y)));
    }
    return result;
}

DistanceMap distance_transform(const BinaryMask& m)
{
    const auto sq = squared_distance_to_sites(m, 0, true);
    DistanceMap d(m.width(), m.height(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        d[i] = m[i] ? std::sqrt(static_cast<double>(sq[i])) : 0.0;
    }
    return d;
}

double max_of(const DistanceMap& d)
{
    double best = 0.0;
    for (double v : d.values()) {
        best = std::max(best, v);
    }
    return best;
}

PixelPos argmax_pixel(const DistanceMap& d)
{
    double best = 0.0;
    std::size_t best_i = d.size();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] > best) {
            best = d[i];
            best_i = i;
        }
    }
    if (best_i == d.size()) {
        throw InvalidInput("argmax_pixel: no error region (all-zero map)");
    }
    return PixelPos{static_cast<int>(best_i % static_cast<std::size_t>(d.width())),
                    static_cast<int>(best_i / static_cast<std::size_t>(d.width()))};
}

BinaryMask dilate(const BinaryMask& m, int r)
{
    if (r < 0) {
        throw InvalidInput("dilate: negative radius");
    }
    const auto sq = squared_distance_to_sites(m, 1, false);
    const std::int64_t r2 = static_cast<std::int64_t>(r) * r;
    BinaryMask out(m.width(), m.height());
    for (std::size_t i = 0; i < m.size(); ++i) {
        out[i] = sq[i] <= r2 ? 1 : 0;
    }
    return out;
}

BinaryMask erode(const BinaryMask& m, int r)
{
    return mask_not(dilate(mask_not(m), r));
}

double color_distance(const Rgb& a, const Rgb& b)
{
    const double dr = static_cast<double>(a.r) - b.r;
    const double dg = static_cast<double>(a.g) - b.g;
    const double db = static_cast<double>(a.b) - b.b;
    return std::sqrt(dr * dr + dg * dg + db * db);
}

GeodesicField geodesic_distance(const Image& img, const BinaryMask& seeds, double lambda)
{
    require_same_shape(img, seeds, "geodesic_distance");
    const int w = img.width();
    const int h = img.height();
    constexpr double inf = std::numeric_limits<double>::infinity();
    GeodesicField dist(w, h, inf);

    using Entry = std::pair<double, std::uint32_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (seeds[i]) {
            dist[i] = 0.0;
            queue.emplace(0.0, static_cast<std::uint32_t>(i));
        }
    }
    if (queue.empty()) {
        throw InvalidInput("geodesic_distance: empty seed set");
    }

    static constexpr int kDx[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static constexpr int kDy[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
    const double diag = std::sqrt(2.0);

    while (!queue.empty()) {
        const auto [cost, idx] = queue.top();
        queue.pop();
        if (cost > dist[idx]) {
            continue;
        }
        const int x = static_cast<int>(idx % static_cast<std::uint32_t>(w));
        const int y = static_cast<int>(idx / static_cast<std::uint32_t>(w));
        const Rgb& here = img[idx];
        for (int k = 0; k < 8; ++k) {
            const int nx = x + kDx[k];
            const int ny = y + kDy[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                continue;
            }
            const std::size_t ni = img.index(nx, ny);
            const double len = (kDx[k] != 0 && kDy[k] != 0) ? diag : 1.0;
            const double step = len * (1.0 + lambda * color_distance(here, img[ni]));
            const double cand = cost + step;
            if (cand < dist[ni]) {
                dist[ni] = cand;
                queue.emplace(cand, static_cast<std::uint32_t>(ni));
            }
        }
    }
    return dist;
}

Image resize_bilinear(const Image& img, int width, int height)
{
    if (width == img.width() && height == img.height()) {
        return img;
    }
    Image out(width, height);
    const double sx = static_cast<double>(img.width()) / width;
    const double sy = static_cast<double>(img.height()) / height;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const float ty = static_cast<float>(fy - y0);
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width() - 1);
            const float tx = static_cast<float>(fx - x0);
            auto lerp = [&](float Rgb::*ch) {
                const float top = img(x0, y0).*ch * (1 - tx) + img(x1, y0).*ch * tx;
                const float bot = img(x0, y1).*ch * (1 - tx) + img(x1, y1).*ch * tx;
                return std::clamp(top * (1 - ty) + bot * ty, 0.f, 1.f);
            };
            out(x, y) = Rgb{lerp(&Rgb::r), lerp(&Rgb::g), lerp(&Rgb::b)};
        }
    }
    return out;
}

int count_components(const BinaryMask& m)
{
    std::vector<std::uint8_t> seen(m.size(), 0);
    std::vector<std::size_t> stack;
    int components = 0;
    for (std::size_t start = 0; start < m.size(); ++start) {
        if (!m[start] || seen[start]) {
            continue;
        }
        ++components;
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(i % static_cast<std::size_t>(m.width()));
            const int y = static_cast<int>(i / static_cast<std::size_t>(m.width()));
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (!m.contains(x + dx, y + dy)) {
                        continue;
                    }
                    const std::size_t j = m.index(x + dx, y + dy);
                    if (m[j] && !seen[j]) {
                        seen[j] = 1;
                        stack.push_back(j);
                    }
                }
            }
        }
    }
    return components;
}

} // namespace clicktrimap
