#include "clicktrimap/predictors.hpp"

#include "clicktrimap/raster_ops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace clicktrimap {

void PredictorInput::validate() const
{
    for (const auto& m : click_masks) {
        require_same_shape(image, m, "predictor input");
    }
    if (previous) {
        require_same_shape(image, *previous, "predictor input");
    }
}

Trimap hard_trimap(const TrimapLogits& logits)
{
    Trimap t(logits.width(), logits.height());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const auto& z = logits[i];
        LabelClass best = LabelClass::Foreground;
        for (LabelClass c : kAllClasses) {
            if (z[index_of(c)] > z[index_of(best)]) {
                best = c;
            }
        }
        t[i] = best;
    }
    return t;
}

PerClass<double> softmax(const PerClass<double>& z)
{
    const double m = std::max({z[0], z[1], z[2]});
    PerClass<double> e{std::exp(z[0] - m), std::exp(z[1] - m), std::exp(z[2] - m)};
    const double s = e[0] + e[1] + e[2];
    return {e[0] / s, e[1] / s, e[2] / s};
}

namespace {

double image_diagonal(const Image& img)
{
    return std::hypot(static_cast<double>(img.width()), static_cast<double>(img.height()));
}

} // namespace

TrimapLogits GeodesicPredictor::predict(const PredictorInput& input) const
{
    input.validate();
    const Image& img = input.image;
    TrimapLogits logits(img.width(), img.height(), PerClass<double>{0.0, 0.0, 0.0});

    PerClass<std::optional<GeodesicField>> fields;
    double g_max = 0.0;
    bool any_click = false;
    for (LabelClass c : kAllClasses) {
        const auto& mask = input.click_masks[index_of(c)];
        if (count_true(mask) == 0) {
            continue;
        }
        any_click = true;
        fields[index_of(c)] = geodesic_distance(img, mask, lambda_);
        g_max = std::max(g_max, max_of(*fields[index_of(c)]));
    }

    if (!any_click) {
        // Empty canvas: Background everywhere.
        const double floor = -image_diagonal(img) / kTemperature;
        for (auto& z : logits.values()) {
            z = {floor, 0.0, floor};
        }
        return logits;
    }

    // Unclicked classes sit strictly below every clicked-class logit.
    const double floor = -std::max(image_diagonal(img), g_max + kTemperature) / kTemperature;
    for (LabelClass c : kAllClasses) {
        const auto& field = fields[index_of(c)];
        for (std::size_t i = 0; i < logits.size(); ++i) {
            logits[i][index_of(c)] = field ? -(*field)[i] / kTemperature : floor;
        }
    }
    return logits;
}

TrimapLogits OraclePredictor::predict(const PredictorInput& input) const
{
    input.validate();
    require_same_shape(input.image, gt_, "oracle predictor");
    Trimap t = input.previous.value_or(
        Trimap(gt_.width(), gt_.height(), LabelClass::Background));
    for (LabelClass c : kAllClasses) {
        const auto& mask = input.click_masks[index_of(c)];
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (mask[i] && gt_[i] == c) {
                t[i] = c;
            }
        }
    }
    TrimapLogits logits(t.width(), t.height(), PerClass<double>{0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < t.size(); ++i) {
        logits[i][index_of(t[i])] = 1.0;
    }
    return logits;
}

// ---------------------------------------------------------------------------------------------

std::size_t MlpParams::expected_size(int f, int h1, int h2, int o)
{
    const auto F = static_cast<std::size_t>(f);
    const auto H1 = static_cast<std::size_t>(h1);
    const auto H2 = static_cast<std::size_t>(h2);
    const auto O = static_cast<std::size_t>(o);
    return H1 * F + H1 + H2 * H1 + H2 + O * H2 + O;
}

MlpParams MlpParams::zeros()
{
    MlpParams p;
    p.values.assign(p.expected_size(), 0.0);
    return p;
}

MlpParams MlpParams::random(std::uint64_t seed)
{
    MlpParams p = zeros();
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double bound) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return (2.0 * u - 1.0) * bound;
    };
    std::size_t off = 0;
    auto fill_layer = [&](int out, int in) {
        const double bound = std::sqrt(6.0 / in);
        for (int i = 0; i < out * in; ++i) {
            p.values[off++] = uniform(bound);
        }
        off += static_cast<std::size_t>(out); // biases stay zero
    };
    fill_layer(p.hidden1, p.feature_dim);
    fill_layer(p.hidden2, p.hidden1);
    fill_layer(p.output_dim, p.hidden2);
    return p;
}

void MlpParams::validate() const
{
    if (feature_dim != kFeatureDim || output_dim != kOutputDim || hidden1 < 1 || hidden2 < 1) {
        throw InvalidInput("mlp parameters: unsupported layer sizes");
    }
    if (values.size() != expected_size()) {
        throw InvalidInput("mlp parameters: expected " + std::to_string(expected_size()) +
                           " values, got " + std::to_string(values.size()));
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw InvalidInput("mlp parameters: non-finite value");
        }
    }
}

std::vector<double> pixel_features(const PredictorInput& input, double lambda)
{
    input.validate();
    const Image& img = input.image;
    const int w = img.width();
    const int h = img.height();
    const double diag = image_diagonal(img);
    PerClass<std::optional<GeodesicField>> fields;
    for (LabelClass c : kAllClasses) {
        const auto& mask = input.click_masks[index_of(c)];
        if (count_true(mask) > 0) {
            fields[index_of(c)] = geodesic_distance(img, mask, lambda);
        }
    }
    std::vector<double> feats(img.size() * kFeatureDim);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = img.index(x, y);
            double* f = feats.data() + i * kFeatureDim;
            f[0] = img[i].r;
            f[1] = img[i].g;
            f[2] = img[i].b;
            f[3] = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
            f[4] = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                f[5 + c] = fields[c] ? std::min(1.0, (*fields[c])[i] / diag) : 1.0;
                f[8 + c] = input.click_masks[c][i] ? 1.0 : 0.0;
            }
        }
    }
    return feats;
}

namespace {

struct LayerView
{
    const double* w1;
    const double* b1;
    const double* w2;
    const double* b2;
    const double* w3;
    const double* b3;
};

struct LayerOffsets
{
    std::size_t w1, b1, w2, b2, w3, b3;
};

LayerOffsets offsets_of(const MlpParams& p)
{
    LayerOffsets o{};
    const auto F = static_cast<std::size_t>(p.feature_dim);
    const auto H1 = static_cast<std::size_t>(p.hidden1);
    const auto H2 = static_cast<std::size_t>(p.hidden2);
    const auto O = static_cast<std::size_t>(p.output_dim);
    o.w1 = 0;
    o.b1 = o.w1 + H1 * F;
    o.w2 = o.b1 + H1;
    o.b2 = o.w2 + H2 * H1;
    o.w3 = o.b2 + H2;
    o.b3 = o.w3 + O * H2;
    return o;
}

} // namespace

TrimapLogits mlp_forward(const MlpParams& params, std::span<const double> features, int width,
                         int height, MlpActivations* cache)
{
    params.validate();
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    const auto F = static_cast<std::size_t>(params.feature_dim);
    const auto H1 = static_cast<std::size_t>(params.hidden1);
    const auto H2 = static_cast<std::size_t>(params.hidden2);
    if (features.size() != n * F) {
        throw InvalidInput("mlp_forward: feature buffer does not match raster size");
    }
    const LayerOffsets o = offsets_of(params);
    const double* P = params.values.data();

    TrimapLogits logits(width, height, PerClass<double>{0.0, 0.0, 0.0});
    std::vector<double> a1(H1);
    std::vector<double> a2(H2);
    if (cache != nullptr) {
        cache->hidden1.resize(n * H1);
        cache->hidden2.resize(n * H2);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = features.data() + i * F;
        for (std::size_t j = 0; j < H1; ++j) {
            const double* row = P + o.w1 + j * F;
            double s = P[o.b1 + j];
            for (std::size_t k = 0; k < F; ++k) {
                s += row[k] * x[k];
            }
            a1[j] = s > 0 ? s : 0.0;
        }
        for (std::size_t j = 0; j < H2; ++j) {
            const double* row = P + o.w2 + j * H1;
            double s = P[o.b2 + j];
            for (std::size_t k = 0; k < H1; ++k) {
                s += row[k] * a1[k];
            }
            a2[j] = s > 0 ? s : 0.0;
        }
        for (std::size_t j = 0; j < 3; ++j) {
            const double* row = P + o.w3 + j * H2;
            double s = P[o.b3 + j];
            for (std::size_t k = 0; k < H2; ++k) {
                s += row[k] * a2[k];
            }
            logits[i][j] = s;
        }
        if (cache != nullptr) {
            std::copy(a1.begin(), a1.end(), cache->hidden1.begin() + static_cast<std::ptrdiff_t>(i * H1));
            std::copy(a2.begin(), a2.end(), cache->hidden2.begin() + static_cast<std::ptrdiff_t>(i * H2));
        }
    }
    return logits;
}

void mlp_backward(const MlpParams& params, std::span<const double> features,
                  const MlpActivations& cache, const TrimapLogits& dlogits,
                  std::vector<double>& grad)
{
    const std::size_t n = dlogits.size();
    const auto F = static_cast<std::size_t>(params.feature_dim);
    const auto H1 = static_cast<std::size_t>(params.hidden1);
    const auto H2 = static_cast<std::size_t>(params.hidden2);
    if (grad.size() != params.values.size()) {
        grad.assign(params.values.size(), 0.0);
    }
    const LayerOffsets o = offsets_of(params);
    const double* P = params.values.data();
    double* G = grad.data();
    std::vector<double> d2(H2);
    std::vector<double> d1(H1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& dz = dlogits[i];
        if (dz[0] == 0.0 && dz[1] == 0.0 && dz[2] == 0.0) {
            continue;
        }
        const double* x = features.data() + i * F;
        const double* a1 = cache.hidden1.data() + i * H1;
        const double* a2 = cache.hidden2.data() + i * H2;

        std::fill(d2.begin(), d2.end(), 0.0);
        for (std::size_t j = 0; j < 3; ++j) {
            const double g = dz[j];
            G[o.b3 + j] += g;
            double* grow = G + o.w3 + j * H2;
            const double* prow = P + o.w3 + j * H2;
            for (std::size_t k = 0; k < H2; ++k) {
                grow[k] += g * a2[k];
                d2[k] += g * prow[k];
            }
        }
        std::fill(d1.begin(), d1.end(), 0.0);
        for (std::size_t j = 0; j < H2; ++j) {
            if (a2[j] <= 0.0) {
                continue;
            }
            const double g = d2[j];
            G[o.b2 + j] += g;
            double* grow = G + o.w2 + j * H1;
            const double* prow = P + o.w2 + j * H1;
            for (std::size_t k = 0; k < H1; ++k) {
                grow[k] += g * a1[k];
                d1[k] += g * prow[k];
            }
        }
        for (std::size_t j = 0; j < H1; ++j) {
            if (a1[j] <= 0.0) {
                continue;
            }
            const double g = d1[j];
            G[o.b1 + j] += g;
            double* grow = G + o.w1 + j * F;
            for (std::size_t k = 0; k < F; ++k) {
                grow[k] += g * x[k];
            }
        }
    }
}

MlpPredictor::MlpPredictor(MlpParams params, double lambda)
    : params_(std::move(params)), lambda_(lambda)
{
    params_.validate();
}

TrimapLogits MlpPredictor::predict(const PredictorInput& input) const
{
    const auto feats = pixel_features(input, lambda_);
    return mlp_forward(params_, feats, input.image.width(), input.image.height());
}

// ---------------------------------------------------------------------------------------------

namespace {

constexpr std::array<std::uint8_t, 4> kMagic = {'T', 'M', 'L', 'P'};
constexpr std::size_t kHeaderBytes = 28;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off)
{
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(in[off + static_cast<std::size_t>(i)]) << (8 * i);
    }
    return v;
}

} // namespace

std::vector<std::uint8_t> serialize_params(const MlpParams& params)
{
    params.validate();
    std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
    put_u32(out, kParamFileVersion);
    put_u32(out, static_cast<std::uint32_t>(params.feature_dim));
    put_u32(out, static_cast<std::uint32_t>(params.hidden1));
    put_u32(out, static_cast<std::uint32_t>(params.hidden2));
    put_u32(out, static_cast<std::uint32_t>(params.output_dim));
    put_u32(out, static_cast<std::uint32_t>(params.values.size()));
    for (double v : params.values) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return out;
}

MlpParams deserialize_params(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kHeaderBytes || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw InvalidInput("parameter file: bad magic or truncated header");
    }
    if (get_u32(bytes, 4) != kParamFileVersion) {
        throw InvalidInput("parameter file: unsupported version " +
                           std::to_string(get_u32(bytes, 4)));
    }
    MlpParams p;
    p.feature_dim = static_cast<int>(get_u32(bytes, 8));
    p.hidden1 = static_cast<int>(get_u32(bytes, 12));
    p.hidden2 = static_cast<int>(get_u32(bytes, 16));
    p.output_dim = static_cast<int>(get_u32(bytes, 20));
    const std::size_t count = get_u32(bytes, 24);
    if (bytes.size() != kHeaderBytes + 4 * count) {
        throw InvalidInput("parameter file: payload size does not match header count");
    }
    p.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        p.values[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
    }
    p.validate();
    return p;
}

void save_params(const MlpParams& params, const std::filesystem::path& path)
{
    const auto bytes = serialize_params(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write parameter file " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

MlpParams load_params(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot read parameter file " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_params(bytes);
}

// ---------------------------------------------------------------------------------------------

PreparedImage prepare_image(Image native, int resolution)
{
    PreparedImage p;
    p.working = resolution > 0 ? resize_bilinear(native, resolution, resolution) : native;
    p.native = std::move(native);
    return p;
}

Click to_working(const Click& c, int native_w, int native_h, int work_w, int work_h)
{
    Click out = c;
    out.x = std::min(work_w - 1, static_cast<int>((c.x + 0.5) * work_w / native_w));
    out.y = std::min(work_h - 1, static_cast<int>((c.y + 0.5) * work_h / native_h));
    return out;
}

Trimap predict_trimap(const Predictor& predictor, const PreparedImage& image,
                      std::span<const Click> clicks, const std::optional<Trimap>& previous,
                      int click_radius)
{
    const Image& native = image.native;
    for (const Click& c : clicks) {
        if (!native.contains(c.x, c.y)) {
            throw InvalidInput("click (" + std::to_string(c.x) + "," + std::to_string(c.y) +
                               ") outside " + std::to_string(native.width()) + "x" +
                               std::to_string(native.height()) + " image");
        }
    }
    const Image& work = predictor.native_resolution() ? native : image.working;
    const bool resized = !work.same_shape(native);

    std::vector<Click> mapped(clicks.begin(), clicks.end());
    if (resized) {
        for (Click& c : mapped) {
            c = to_working(c, native.width(), native.height(), work.width(), work.height());
        }
    }
    PredictorInput input;
    input.image = work;
    input.click_masks = encode_clicks(mapped, work.width(), work.height(), click_radius);
    if (previous && predictor.uses_previous()) {
        input.previous = resized ? resize_nearest(*previous, work.width(), work.height())
                                 : *previous;
    }
    Trimap t = hard_trimap(predictor.predict(input));
    return resized ? resize_nearest(t, native.width(), native.height()) : t;
}

Trimap replay_prediction(const Predictor& predictor, const PreparedImage& image,
                         std::span<const Click> clicks, int click_radius)
{
    if (!predictor.uses_previous()) {
        return predict_trimap(predictor, image, clicks, std::nullopt, click_radius);
    }
    std::optional<Trimap> prev;
    prev = predict_trimap(predictor, image, {}, std::nullopt, click_radius);
    for (std::size_t k = 1; k <= clicks.size(); ++k) {
        prev = predict_trimap(predictor, image, clicks.first(k), prev, click_radius);
    }
    return *prev;
}

} // namespace clicktrimap
