#include "clicktrimap/core_types.hpp"

#include <algorithm>
#include <cmath>

namespace clicktrimap {

std::string_view to_string(LabelClass c)
{
    switch (c) {
    case LabelClass::Foreground:
        return "foreground";
    case LabelClass::Background:
        return "background";
    case LabelClass::Unknown:
        return "unknown";
    }
    return "?";
}

char to_letter(LabelClass c)
{
    switch (c) {
    case LabelClass::Foreground:
        return 'F';
    case LabelClass::Background:
        return 'B';
    case LabelClass::Unknown:
        return 'U';
    }
    return '?';
}

LabelClass label_from_letter(std::string_view s)
{
    if (s == "F" || s == "f" || s == "foreground") {
        return LabelClass::Foreground;
    }
    if (s == "B" || s == "b" || s == "background") {
        return LabelClass::Background;
    }
    if (s == "U" || s == "u" || s == "unknown") {
        return LabelClass::Unknown;
    }
    throw InvalidInput("unknown label '" + std::string(s) + "' (expected F, B or U)");
}

void SimulationConfig::validate() const
{
    if (!(alpha_threshold >= 0.0 && alpha_threshold <= 1.0)) {
        throw InvalidInput("alpha threshold must lie in [0,1]");
    }
    if (!(beta_threshold >= 0.0)) {
        throw InvalidInput("beta threshold must be >= 0");
    }
    if (!(gamma >= 0.0)) {
        throw InvalidInput("gamma must be >= 0");
    }
    if (max_clicks < 1) {
        throw InvalidInput("max clicks must be >= 1");
    }
    if (click_radius < 1) {
        throw InvalidInput("click radius must be >= 1");
    }
}

BinaryMask trimap_to_mask(const Trimap& t, LabelClass c)
{
    BinaryMask m(t.width(), t.height());
    for (std::size_t i = 0; i < t.size(); ++i) {
        m[i] = t[i] == c ? 1 : 0;
    }
    return m;
}

Trimap masks_to_trimap(const PerClass<BinaryMask>& masks)
{
    const auto& ref = masks[0];
    require_same_shape(ref, masks[1], "masks_to_trimap");
    require_same_shape(ref, masks[2], "masks_to_trimap");
    Trimap t(ref.width(), ref.height());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        int claimed = 0;
        for (LabelClass c : kAllClasses) {
            if (masks[index_of(c)][i]) {
                t[i] = c;
                ++claimed;
            }
        }
        if (claimed != 1) {
            throw InvalidInput("masks do not partition the raster at pixel index " +
                               std::to_string(i));
        }
    }
    return t;
}

PerClass<BinaryMask> encode_clicks(std::span<const Click> clicks, int width, int height,
                                   int radius)
{
    PerClass<BinaryMask> masks = {BinaryMask(width, height), BinaryMask(width, height),
                                  BinaryMask(width, height)};
    const long r2 = static_cast<long>(radius) * radius;
    for (const Click& c : clicks) {
        if (!masks[0].contains(c.x, c.y)) {
            throw InvalidInput("click (" + std::to_string(c.x) + "," + std::to_string(c.y) +
                               ") outside " + std::to_string(width) + "x" +
                               std::to_string(height) + " raster");
        }
        auto& m = masks[index_of(c.label)];
        const int y0 = std::max(0, c.y - radius);
        const int y1 = std::min(height - 1, c.y + radius);
        const int x0 = std::max(0, c.x - radius);
        const int x1 = std::min(width - 1, c.x + radius);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const long dx = x - c.x;
                const long dy = y - c.y;
                if (dx * dx + dy * dy <= r2) {
                    m(x, y) = 1;
                }
            }
        }
    }
    return masks;
}

std::size_t count_true(const BinaryMask& m)
{
    return static_cast<std::size_t>(std::count_if(m.values().begin(), m.values().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

std::size_t count_label(const Trimap& t, LabelClass c)
{
    return static_cast<std::size_t>(std::count(t.values().begin(), t.values().end(), c));
}

std::size_t count_mismatched(const Trimap& a, const Trimap& b)
{
    require_same_shape(a, b, "count_mismatched");
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        n += a[i] != b[i] ? 1 : 0;
    }
    return n;
}

} // namespace clicktrimap
