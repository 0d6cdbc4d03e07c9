#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "usvseg/error.hpp"
#include "usvseg/imaging/image.hpp"

namespace usvseg {

enum class Colorspace { RGB, HSV, Lab, YCrCb };

inline std::string_view to_string(Colorspace space)
{
    switch (space) {
    case Colorspace::RGB: return "rgb";
    case Colorspace::HSV: return "hsv";
    case Colorspace::Lab: return "lab";
    case Colorspace::YCrCb: return "ycrcb";
    }
    return "rgb";
}

inline Colorspace parse_colorspace(std::string_view name)
{
    if (name == "rgb") return Colorspace::RGB;
    if (name == "hsv") return Colorspace::HSV;
    if (name == "lab") return Colorspace::Lab;
    if (name == "ycrcb") return Colorspace::YCrCb;
    throw InvalidArgument("unknown colorspace '" + std::string(name) + "'");
}

using Color3 = std::array<double, 3>;

namespace color {

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

/// Hexcone model; hue scaled from degrees to [0,1).
inline Color3 rgb_to_hsv(const Color3& rgb)
{
    const auto [r, g, b] = rgb;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double chroma = mx - mn;
    double hue = 0.0;
    if (chroma > 0.0) {
        if (mx == r) {
            hue = std::fmod((g - b) / chroma, 6.0);
            if (hue < 0.0) hue += 6.0;
        } else if (mx == g) {
            hue = (b - r) / chroma + 2.0;
        } else {
            hue = (r - g) / chroma + 4.0;
        }
        hue /= 6.0;
    }
    const double sat = mx > 0.0 ? chroma / mx : 0.0;
    return {clamp01(hue), clamp01(sat), clamp01(mx)};
}

inline double srgb_to_linear(double c)
{
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

/// CIE L*a*b* under D65, then L/100 and (a,b)+128 over 255 into [0,1].
inline Color3 rgb_to_lab(const Color3& rgb)
{
    const double r = srgb_to_linear(rgb[0]);
    const double g = srgb_to_linear(rgb[1]);
    const double b = srgb_to_linear(rgb[2]);
    const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    constexpr double delta = 6.0 / 29.0;
    auto f = [](double t) {
        return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
    };
    const double fx = f(x);
    const double fy = f(y);
    const double fz = f(z);
    const double lightness = 116.0 * fy - 16.0;
    const double a = 500.0 * (fx - fy);
    const double bb = 200.0 * (fy - fz);
    return {clamp01(lightness / 100.0), clamp01((a + 128.0) / 255.0), clamp01((bb + 128.0) / 255.0)};
}

/// Full-range BT.601 with the chroma planes offset by 0.5; channel order Y, Cr, Cb.
inline Color3 rgb_to_ycrcb(const Color3& rgb)
{
    const auto [r, g, b] = rgb;
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    const double cr = (r - y) / 1.402 + 0.5;
    const double cb = (b - y) / 1.772 + 0.5;
    return {clamp01(y), clamp01(cr), clamp01(cb)};
}

inline Color3 convert(const Color3& rgb, Colorspace space)
{
    switch (space) {
    case Colorspace::RGB: return {clamp01(rgb[0]), clamp01(rgb[1]), clamp01(rgb[2])};
    case Colorspace::HSV: return rgb_to_hsv(rgb);
    case Colorspace::Lab: return rgb_to_lab(rgb);
    case Colorspace::YCrCb: return rgb_to_ycrcb(rgb);
    }
    return rgb;
}

} // namespace color

/// Converts a 3-channel RGB image in [0,1]; every output channel is clamped to [0,1].
inline ImageF convert_colorspace(const ImageF& img, Colorspace space)
{
    if (img.channels != 3) {
        throw InvalidArgument("colorspace conversion needs 3 channels, got " + std::to_string(img.channels));
    }
    ImageF out(img.width, img.height, 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const Color3 c = color::convert({img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]}, space);
        out.data[3 * i] = c[0];
        out.data[3 * i + 1] = c[1];
        out.data[3 * i + 2] = c[2];
    }
    return out;
}

} // namespace usvseg
