#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "usvseg/error.hpp"

namespace usvseg {

/// Row-major, channel-interleaved raster.
template <class T>
struct Image {
    using value_type = T;

    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<T> data;

    Image() = default;

    Image(int w, int h, int c = 1, T fill = T{}) : width(w), height(h), channels(c)
    {
        if (w < 0 || h < 0 || c < 1) {
            throw InvalidArgument("image dimensions must be non-negative with at least one channel");
        }
        data.assign(static_cast<std::size_t>(w) * h * c, fill);
    }

    [[nodiscard]] std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    [[nodiscard]] bool empty() const { return data.empty(); }

    [[nodiscard]] std::size_t index(int x, int y, int c = 0) const
    {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }

    T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

    /// Replicate-edge access for single-channel planes.
    const T& clamped(int x, int y) const
    {
        x = x < 0 ? 0 : (x >= width ? width - 1 : x);
        y = y < 0 ? 0 : (y >= height ? height - 1 : y);
        return data[static_cast<std::size_t>(y) * width + x];
    }

    friend bool operator==(const Image&, const Image&) = default;
};

using ImageU8 = Image<std::uint8_t>;
using ImageF = Image<double>;
/// Single-channel scalar field.
using Plane = Image<double>;
/// Binary mask, values 0 or 1.
using Mask = Image<std::uint8_t>;

/// Bytes in [0,255] to values in [0,1].
inline ImageF to_unit(const ImageU8& img)
{
    ImageF out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        out.data[i] = img.data[i] / 255.0;
    }
    return out;
}

inline ImageU8 from_unit(const ImageF& img)
{
    ImageU8 out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const double v = std::round(img.data[i] * 255.0);
        out.data[i] = static_cast<std::uint8_t>(v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v));
    }
    return out;
}

/// Gray frames are promoted by channel replication.
inline ImageU8 to_rgb(const ImageU8& img)
{
    if (img.channels == 3) {
        return img;
    }
    if (img.channels != 1) {
        throw InvalidArgument("unsupported channel count " + std::to_string(img.channels));
    }
    ImageU8 out(img.width, img.height, 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = img.data[i];
    }
    return out;
}

/// 0/1 mask to a 0/255 gray image for writing.
inline ImageU8 mask_to_gray(const Mask& mask)
{
    ImageU8 out(mask.width, mask.height, 1);
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
        out.data[i] = mask.data[i] ? 255 : 0;
    }
    return out;
}

} // namespace usvseg
