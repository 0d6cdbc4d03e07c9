#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "usvseg/error.hpp"
#include "usvseg/imaging/image.hpp"

namespace usvseg {

enum class Interp { Bilinear, Nearest };

/// Source index of destination pixel `dst` under nearest-neighbour sampling.
inline int nearest_source_index(int dst, int src_size, int dst_size)
{
    const auto src = static_cast<int>(std::floor((dst + 0.5) * src_size / dst_size));
    return std::clamp(src, 0, src_size - 1);
}

/// Half-pixel-centred resampling. Integral outputs are rounded and saturated.
/// Bilinear is for frames, nearest for label images.
template <class OutArg = void, class In>
auto resize(const Image<In>& img, int out_w, int out_h, Interp mode)
{
    using Out = std::conditional_t<std::is_void_v<OutArg>, In, OutArg>;
    if (out_w < 1 || out_h < 1) {
        throw InvalidArgument("resize target must be at least 1x1");
    }
    if (img.empty()) {
        throw InvalidArgument("resize of an empty image");
    }
    Image<Out> out(out_w, out_h, img.channels);
    const int ch = img.channels;

    auto store = [](double v) -> Out {
        if constexpr (std::is_integral_v<Out>) {
            const double r = std::round(v);
            const double lo = static_cast<double>(std::numeric_limits<Out>::min());
            const double hi = static_cast<double>(std::numeric_limits<Out>::max());
            return static_cast<Out>(std::clamp(r, lo, hi));
        } else {
            return static_cast<Out>(v);
        }
    };

    if (mode == Interp::Nearest) {
        for (int y = 0; y < out_h; ++y) {
            const int sy = nearest_source_index(y, img.height, out_h);
            for (int x = 0; x < out_w; ++x) {
                const int sx = nearest_source_index(x, img.width, out_w);
                for (int c = 0; c < ch; ++c) {
                    out.at(x, y, c) = store(static_cast<double>(img.at(sx, sy, c)));
                }
            }
        }
        return out;
    }

    const double sx_scale = static_cast<double>(img.width) / out_w;
    const double sy_scale = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, img.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, img.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < ch; ++c) {
                const double top = (1.0 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c);
                const double bot = (1.0 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c);
                out.at(x, y, c) = store((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

} // namespace usvseg
