#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace clicktrimap {

/// Error raised on contract violations (bad dimensions, out-of-bounds clicks, empty inputs).
class InvalidInput : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

// Order is significant: argmax ties resolve to the smaller value.
enum class LabelClass : std::uint8_t { Foreground = 0, Background = 1, Unknown = 2 };

inline constexpr std::array<LabelClass, 3> kAllClasses = {
    LabelClass::Foreground, LabelClass::Background, LabelClass::Unknown};

constexpr std::size_t index_of(LabelClass c) { return static_cast<std::size_t>(c); }

std::string_view to_string(LabelClass c);
char to_letter(LabelClass c);
LabelClass label_from_letter(std::string_view s);

template <typename T>
using PerClass = std::array<T, 3>;

/// Row-major raster with (0,0) at the top-left.
template <typename T>
class Raster
{
  public:
    Raster() = default;
    Raster(int width, int height, T fill = T{}) : width_(width), height_(height)
    {
        if (width < 1 || height < 1) {
            throw InvalidInput("raster dimensions must be at least 1x1, got " +
                               std::to_string(width) + "x" + std::to_string(height));
        }
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }
    Raster(int width, int height, std::vector<T> data) : width_(width), height_(height)
    {
        if (width < 1 || height < 1 ||
            data.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
            throw InvalidInput("raster data does not match " + std::to_string(width) + "x" +
                               std::to_string(height));
        }
        data_ = std::move(data);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    const std::vector<T>& data() const { return data_; }

    template <typename U>
    bool same_shape(const Raster<U>& other) const
    {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Raster&) const = default;

  private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

struct Rgb
{
    float r = 0.f;
    float g = 0.f;
    float b = 0.f;
    bool operator==(const Rgb&) const = default;
};

using Image = Raster<Rgb>;
using Trimap = Raster<LabelClass>;
// std::uint8_t rather than bool: vector<bool> has no contiguous storage.
using BinaryMask = Raster<std::uint8_t>;
using DistanceMap = Raster<double>;
using AlphaMatte = Raster<float>;

struct Click
{
    int x = 0;
    int y = 0;
    LabelClass label = LabelClass::Foreground;
    int ordinal = 0;
    bool operator==(const Click&) const = default;
};

struct SimulationConfig
{
    double alpha_threshold = 0.1;
    double beta_threshold = 2.0;
    double gamma = 2.0;
    int max_clicks = 10;
    int click_radius = 5;

    /// Throws InvalidInput when a field is outside its domain. alpha_threshold = 0 is
    /// accepted so that sweeps can disable the unknown-priority branch.
    void validate() const;
};

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, std::string_view what)
{
    if (!a.same_shape(b)) {
        throw InvalidInput(std::string(what) + ": dimension mismatch (" +
                           std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                           std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
    }
}

BinaryMask trimap_to_mask(const Trimap& t, LabelClass c);

/// Inverse of trimap_to_mask for a partition; throws if any pixel is not claimed by exactly one mask.
Trimap masks_to_trimap(const PerClass<BinaryMask>& masks);

/// Union of Euclidean disks of `radius` around each click, one mask per class.
PerClass<BinaryMask> encode_clicks(std::span<const Click> clicks, int width, int height,
                                   int radius);

std::size_t count_true(const BinaryMask& m);
std::size_t count_label(const Trimap& t, LabelClass c);

/// Count of pixels where the two trimaps disagree.
std::size_t count_mismatched(const Trimap& a, const Trimap& b);

} // namespace clicktrimap
