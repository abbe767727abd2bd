#include "clicktrimap/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace clicktrimap {

namespace {

struct ReadCursor
{
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;
};

void read_callback(png_structp png, png_bytep out, png_size_t len)
{
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + len > cur->data.size()) {
        png_error(png, "truncated");
    }
    std::memcpy(out, cur->data.data() + cur->pos, len);
    cur->pos += len;
}

void write_callback(png_structp png, png_bytep in, png_size_t len)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), in, in + len);
}

void flush_callback(png_structp) {}

[[noreturn]] void error_callback(png_structp png, png_const_charp msg)
{
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    *err = msg;
    png_longjmp(png, 1);
}

void warning_callback(png_structp, png_const_charp) {}

std::uint8_t to_byte(float v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
}

} // namespace

DecodedPng decode_png(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw InvalidInput("undecodable: not a PNG stream");
    }
    std::string err;
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, error_callback, warning_callback);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("libpng: out of memory");
    }
    ReadCursor cursor{bytes, 0};
    DecodedPng out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InvalidInput("undecodable: " + err);
    }
    png_set_read_fn(png, &cursor, read_callback);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) {
        png_set_strip_16(png);
    }
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (color & PNG_COLOR_MASK_ALPHA) {
        png_set_strip_alpha(png);
    }
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = static_cast<int>(png_get_channels(png, info));
    if ((out.channels != 1 && out.channels != 3) || out.width < 1 || out.height < 1) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InvalidInput("undecodable: unsupported PNG layout");
    }
    const std::size_t stride = static_cast<std::size_t>(out.width) * out.channels;
    out.pixels.resize(stride * static_cast<std::size_t>(out.height));
    rows.resize(static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y) {
        rows[static_cast<std::size_t>(y)] = out.pixels.data() + stride * static_cast<std::size_t>(y);
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

std::vector<std::uint8_t> encode_png(int width, int height, int channels,
                                     std::span<const std::uint8_t> pixels)
{
    if ((channels != 1 && channels != 3) ||
        pixels.size() != static_cast<std::size_t>(width) * height * channels) {
        throw InvalidInput("encode_png: pixel buffer does not match dimensions");
    }
    std::string err;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, error_callback, warning_callback);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng: out of memory");
    }
    std::vector<std::uint8_t> out;
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png encode failed: " + err);
    }
    png_set_write_fn(png, &out, write_callback, flush_callback);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(pixels.data() + stride * static_cast<std::size_t>(y));
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

std::vector<std::uint8_t> image_to_png(const Image& img)
{
    std::vector<std::uint8_t> px(img.size() * 3);
    for (std::size_t i = 0; i < img.size(); ++i) {
        px[3 * i] = to_byte(img[i].r);
        px[3 * i + 1] = to_byte(img[i].g);
        px[3 * i + 2] = to_byte(img[i].b);
    }
    return encode_png(img.width(), img.height(), 3, px);
}

Image image_from_png(std::span<const std::uint8_t> bytes)
{
    const DecodedPng d = decode_png(bytes);
    Image img(d.width, d.height);
    for (std::size_t i = 0; i < img.size(); ++i) {
        if (d.channels == 1) {
            const float v = d.pixels[i] / 255.f;
            img[i] = Rgb{v, v, v};
        } else {
            img[i] = Rgb{d.pixels[3 * i] / 255.f, d.pixels[3 * i + 1] / 255.f,
                         d.pixels[3 * i + 2] / 255.f};
        }
    }
    return img;
}

namespace {

std::uint8_t trimap_value(LabelClass c)
{
    switch (c) {
    case LabelClass::Foreground:
        return kTrimapForeground;
    case LabelClass::Background:
        return kTrimapBackground;
    case LabelClass::Unknown:
        return kTrimapUnknown;
    }
    return kTrimapUnknown;
}

LabelClass trimap_label(std::uint8_t v)
{
    if (v < 64) {
        return LabelClass::Background;
    }
    if (v > 191) {
        return LabelClass::Foreground;
    }
    return LabelClass::Unknown;
}

std::vector<std::uint8_t> gray_channel(const DecodedPng& d)
{
    if (d.channels == 1) {
        return d.pixels;
    }
    std::vector<std::uint8_t> g(static_cast<std::size_t>(d.width) * d.height);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = d.pixels[3 * i];
    }
    return g;
}

} // namespace

std::vector<std::uint8_t> trimap_to_png(const Trimap& t)
{
    std::vector<std::uint8_t> px(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        px[i] = trimap_value(t[i]);
    }
    return encode_png(t.width(), t.height(), 1, px);
}

Trimap trimap_from_png(std::span<const std::uint8_t> bytes)
{
    const DecodedPng d = decode_png(bytes);
    const auto g = gray_channel(d);
    Trimap t(d.width, d.height);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = trimap_label(g[i]);
    }
    return t;
}

std::vector<std::uint8_t> alpha_to_png(const AlphaMatte& a)
{
    std::vector<std::uint8_t> px(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        px[i] = to_byte(a[i]);
    }
    return encode_png(a.width(), a.height(), 1, px);
}

AlphaMatte alpha_from_png(std::span<const std::uint8_t> bytes)
{
    const DecodedPng d = decode_png(bytes);
    const auto g = gray_channel(d);
    AlphaMatte a(d.width, d.height);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = g[i] / 255.f;
    }
    return a;
}

nlohmann::json trimap_to_rle(const Trimap& t)
{
    nlohmann::json runs = nlohmann::json::array();
    std::size_t i = 0;
    while (i < t.size()) {
        std::size_t j = i;
        while (j < t.size() && t[j] == t[i]) {
            ++j;
        }
        runs.push_back({trimap_value(t[i]), j - i});
        i = j;
    }
    return {{"width", t.width()}, {"height", t.height()}, {"runs", runs}};
}

Trimap trimap_from_rle(const nlohmann::json& j)
{
    Trimap t(j.at("width").get<int>(), j.at("height").get<int>());
    std::size_t pos = 0;
    for (const auto& run : j.at("runs")) {
        const LabelClass c = trimap_label(run.at(0).get<std::uint8_t>());
        const auto len = run.at(1).get<std::size_t>();
        if (pos + len > t.size()) {
            throw InvalidInput("trimap rle: runs exceed raster size");
        }
        std::fill_n(t.values().begin() + static_cast<std::ptrdiff_t>(pos), len, c);
        pos += len;
    }
    if (pos != t.size()) {
        throw InvalidInput("trimap rle: runs do not cover the raster");
    }
    return t;
}

} // namespace clicktrimap
