#pragma once

#include <algorithm>
#include <compare>

namespace usvseg {

/// Axis-aligned pixel box; covers columns [x, x+w) and rows [y, y+h).
struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    [[nodiscard]] int right() const { return x + w; }
    [[nodiscard]] int bottom() const { return y + h; }
    [[nodiscard]] long area() const { return static_cast<long>(w) * h; }
    [[nodiscard]] double center_x() const { return x + 0.5 * w; }
    [[nodiscard]] double center_y() const { return y + 0.5 * h; }

    friend auto operator<=>(const BoundingBox&, const BoundingBox&) = default;
};

inline BoundingBox box_union(const BoundingBox& a, const BoundingBox& b)
{
    const int x0 = std::min(a.x, b.x);
    const int y0 = std::min(a.y, b.y);
    const int x1 = std::max(a.right(), b.right());
    const int y1 = std::max(a.bottom(), b.bottom());
    return {x0, y0, x1 - x0, y1 - y0};
}

inline long intersection_area(const BoundingBox& a, const BoundingBox& b)
{
    const int iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const int ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (iw <= 0 || ih <= 0) {
        return 0;
    }
    return static_cast<long>(iw) * ih;
}

/// Intersection over union; 0 for two empty boxes.
inline double iou(const BoundingBox& a, const BoundingBox& b)
{
    const long inter = intersection_area(a, b);
    const long uni = a.area() + b.area() - inter;
    return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

/// Chebyshev separation between two boxes: 0 when they overlap or touch.
inline int box_gap(const BoundingBox& a, const BoundingBox& b)
{
    const int gx = std::max(0, std::max(a.x, b.x) - std::min(a.right(), b.right()));
    const int gy = std::max(0, std::max(a.y, b.y) - std::min(a.bottom(), b.bottom()));
    return std::max(gx, gy);
}

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

} // namespace usvseg
