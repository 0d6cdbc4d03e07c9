#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "usvseg/error.hpp"
#include "usvseg/imaging/image.hpp"

namespace usvseg {

/// Square odd-sided weight grid, indexed by offset from the centre.
struct Kernel2D {
    int size = 1;
    std::vector<double> weights{1.0};

    [[nodiscard]] int radius() const { return size / 2; }

    double& at(int dx, int dy) { return weights[(dy + radius()) * size + dx + radius()]; }
    [[nodiscard]] double at(int dx, int dy) const { return weights[(dy + radius()) * size + dx + radius()]; }

    [[nodiscard]] double sum() const
    {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

/// Neighbourhood kernels for the MRF: `lambda` has a zero centre and unit sum,
/// `lambda1` is the same kernel with the centre set to one.
struct MrfKernels {
    Kernel2D lambda;
    Kernel2D lambda1;
};

/// Kernel side is 2% of the smaller image side, rounded to an odd size of at least 3.
inline MrfKernels make_mrf_kernels(int image_min_side)
{
    if (image_min_side < 3) {
        throw InvalidArgument("MRF kernels need an image side of at least 3 pixels");
    }
    const int half = std::max(1, static_cast<int>(std::lround(0.01 * image_min_side)));
    Kernel2D lambda;
    lambda.size = 2 * half + 1;
    lambda.weights.assign(static_cast<std::size_t>(lambda.size) * lambda.size, 0.0);
    const double sigma = lambda.size / 2.5;
    double total = 0.0;
    for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            lambda.at(dx, dy) = w;
            total += w;
        }
    }
    for (double& w : lambda.weights) w /= total;

    Kernel2D lambda1 = lambda;
    lambda1.at(0, 0) = 1.0;
    return {std::move(lambda), std::move(lambda1)};
}

/// 2-D correlation with replicate-edge borders; output has the input's size.
inline Plane convolve_field(const Plane& field, const Kernel2D& kernel)
{
    if (field.channels != 1) {
        throw InvalidArgument("convolve_field expects a single-channel plane");
    }
    const int w = field.width;
    const int h = field.height;
    const int r = kernel.radius();
    Plane out(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int sy = std::clamp(y + dy, 0, h - 1);
                const double* row = field.data.data() + static_cast<std::size_t>(sy) * w;
                const double* krow = kernel.weights.data() + (dy + r) * kernel.size + r;
                for (int dx = -r; dx <= r; ++dx) {
                    acc += krow[dx] * row[std::clamp(x + dx, 0, w - 1)];
                }
            }
            out.data[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

} // namespace usvseg
