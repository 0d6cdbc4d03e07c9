#pragma once

#include <Eigen/Dense>

#include "usvseg/error.hpp"
#include "usvseg/imaging/colorspace.hpp"
#include "usvseg/imaging/image.hpp"
#include "usvseg/imaging/resize.hpp"

namespace usvseg {

enum class FeatureMode {
    Full,      ///< (x, y, c1, c2, c3)
    ColorOnly, ///< (c1, c2, c3)
};

/// Per-pixel feature vectors stored column-wise: column i is pixel i in row-major order.
struct FeatureField {
    int width = 0;
    int height = 0;
    Eigen::MatrixXd values;

    [[nodiscard]] int dim() const { return static_cast<int>(values.rows()); }
    [[nodiscard]] int size() const { return static_cast<int>(values.cols()); }
    [[nodiscard]] auto at(int i) const { return values.col(i); }
};

/// Spatial coordinates are normalised to [0,1] (x/(W-1), y/(H-1)); colour
/// channels are taken as-is.
inline FeatureField extract_features(const ImageF& img, FeatureMode mode)
{
    if (img.channels != 3) {
        throw InvalidArgument("feature extraction needs a 3-channel image");
    }
    if (img.width < 2 || img.height < 2) {
        throw InvalidArgument("feature extraction needs at least 2x2 pixels");
    }
    const int spatial = mode == FeatureMode::Full ? 2 : 0;
    FeatureField field;
    field.width = img.width;
    field.height = img.height;
    field.values.resize(spatial + 3, static_cast<Eigen::Index>(img.pixel_count()));
    const double sx = 1.0 / (img.width - 1);
    const double sy = 1.0 / (img.height - 1);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Eigen::Index i = static_cast<Eigen::Index>(y) * img.width + x;
            if (spatial) {
                field.values(0, i) = x * sx;
                field.values(1, i) = y * sy;
            }
            for (int c = 0; c < 3; ++c) {
                field.values(spatial + c, i) = img.at(x, y, c);
            }
        }
    }
    return field;
}

/// Frame at full resolution to features at the working resolution:
/// bilinear downscale, colour conversion, feature extraction.
inline FeatureField working_features(const ImageU8& frame, int working_w, int working_h, Colorspace space,
                                     FeatureMode mode)
{
    const ImageU8 rgb = to_rgb(frame);
    ImageF small = resize<double>(rgb, working_w, working_h, Interp::Bilinear);
    for (double& v : small.data) v /= 255.0;
    return extract_features(convert_colorspace(small, space), mode);
}

} // namespace usvseg
