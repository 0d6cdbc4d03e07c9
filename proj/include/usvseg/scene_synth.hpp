#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "usvseg/error.hpp"
#include "usvseg/evaluation.hpp"
#include "usvseg/geometry.hpp"
#include "usvseg/imaging/colorspace.hpp"
#include "usvseg/imaging/image.hpp"

namespace usvseg {

struct Band {
    Color3 color{};
    double noise = 0.0; ///< per-channel Gaussian sigma, in [0,1] units
};

enum class EdgeShape { Flat, Slanted, Staircase };

inline std::string_view to_string(EdgeShape s)
{
    switch (s) {
    case EdgeShape::Flat: return "flat";
    case EdgeShape::Slanted: return "slanted";
    case EdgeShape::Staircase: return "staircase";
    }
    return "flat";
}

inline EdgeShape parse_edge_shape(std::string_view name)
{
    if (name == "flat") return EdgeShape::Flat;
    if (name == "slanted") return EdgeShape::Slanted;
    if (name == "staircase") return EdgeShape::Staircase;
    throw InvalidArgument("unknown edge shape '" + std::string(name) + "'");
}

/// Water edge as fractions of the frame height at the left and right border.
/// Flat uses `left` only; staircase interpolates `steps` constant levels.
struct EdgeSpec {
    EdgeShape shape = EdgeShape::Flat;
    double left = 0.5;
    double right = 0.5;
    int steps = 3;
};

/// A small obstacle: top-left corner at frame 0 plus a per-frame velocity, full-resolution pixels.
struct ObstacleSpec {
    double x = 0.0;
    double y = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    int w = 8;
    int h = 8;
    Color3 color{};
};

/// Static obstacle straddling the water edge.
struct LargeObstacleSpec {
    BoundingBox box;
    Color3 color{};
};

struct GlitterSpec {
    BoundingBox region;
    double density = 0.0;
};

struct SceneSpec {
    std::uint64_t seed = 1;
    int width = 640;
    int height = 480;
    int frames = 1;
    Band sky{{0.70, 0.80, 0.92}, 0.02};
    Band shore{{0.35, 0.42, 0.28}, 0.03};
    Band water{{0.10, 0.28, 0.42}, 0.03};
    /// Height of the shore band above the edge, as a fraction of the frame height.
    double shore_height = 0.12;
    EdgeSpec edge;
    std::vector<ObstacleSpec> obstacles;
    std::vector<LargeObstacleSpec> large_obstacles;
    std::optional<GlitterSpec> glitter;
    /// Fraction of pixels replaced by a uniformly random colour.
    double salt_fraction = 0.0;
    /// Minimum Euclidean RGB distance between an obstacle colour and the water colour.
    double min_contrast = 0.15;
};

struct SyntheticFrame {
    ImageU8 image;
    FrameAnnotation annotation;
    ImageU8 labels; ///< 1 water, 2 shore, 3 sky, 0 obstacle
};

namespace synth {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t frame_seed(std::uint64_t seed, int frame)
{
    return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(frame) + 1));
}

inline double distance(const Color3& a, const Color3& b)
{
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

inline int step_boundary(int j, int steps, int width)
{
    return static_cast<int>(std::lround(static_cast<double>(j) * width / steps));
}

inline double step_level(const SceneSpec& spec, int j)
{
    const int steps = spec.edge.steps;
    const double t = steps > 1 ? static_cast<double>(j) / (steps - 1) : 0.0;
    return std::round((spec.edge.left + (spec.edge.right - spec.edge.left) * t) * spec.height);
}

} // namespace synth

/// Continuous row of the water edge at column x; rows at or below it are water.
inline double edge_row_at(const SceneSpec& spec, int x)
{
    const double h = spec.height;
    switch (spec.edge.shape) {
    case EdgeShape::Flat: return spec.edge.left * h;
    case EdgeShape::Slanted: {
        const double t = spec.width > 1 ? static_cast<double>(x) / (spec.width - 1) : 0.0;
        return (spec.edge.left + (spec.edge.right - spec.edge.left) * t) * h;
    }
    case EdgeShape::Staircase: {
        for (int j = spec.edge.steps - 1; j >= 0; --j) {
            if (x >= synth::step_boundary(j, spec.edge.steps, spec.width)) return synth::step_level(spec, j);
        }
        return synth::step_level(spec, 0);
    }
    }
    return spec.edge.left * h;
}

/// First water row in column x.
inline int first_water_row(const SceneSpec& spec, int x) { return static_cast<int>(std::ceil(edge_row_at(spec, x))); }

inline BoundingBox obstacle_box_at(const ObstacleSpec& o, int frame)
{
    return {static_cast<int>(std::lround(o.x + o.vx * frame)), static_cast<int>(std::lround(o.y + o.vy * frame)), o.w,
            o.h};
}

/// Water polygon: the edge outline followed by the two bottom corners.
inline std::vector<Point2> water_polygon(const SceneSpec& spec)
{
    const double right = spec.width - 1.0;
    const double bottom = spec.height - 1.0;
    std::vector<Point2> poly;
    if (spec.edge.shape == EdgeShape::Staircase) {
        const int steps = spec.edge.steps;
        for (int j = 0; j < steps; ++j) {
            const double level = synth::step_level(spec, j);
            const int b0 = synth::step_boundary(j, steps, spec.width);
            const int b1 = synth::step_boundary(j + 1, steps, spec.width) - 1;
            poly.push_back({static_cast<double>(b0), level});
            poly.push_back({static_cast<double>(b1), level});
        }
    } else {
        poly.push_back({0.0, edge_row_at(spec, 0)});
        poly.push_back({right, edge_row_at(spec, spec.width - 1)});
    }
    poly.push_back({right, bottom});
    poly.push_back({0.0, bottom});
    return poly;
}

inline void validate(const SceneSpec& spec)
{
    if (spec.width < 8 || spec.height < 8) throw InvalidArgument("scene must be at least 8x8 pixels");
    if (spec.frames < 1) throw InvalidArgument("scene needs at least one frame");
    if (spec.edge.shape == EdgeShape::Staircase && (spec.edge.steps < 2 || spec.edge.steps > spec.width / 2)) {
        throw InvalidArgument("staircase edge needs between 2 and width/2 steps");
    }
    if (!(spec.shore_height > 0.0)) throw InvalidArgument("shore band must have positive height");
    for (const Band* b : {&spec.sky, &spec.shore, &spec.water}) {
        for (double c : b->color)
            if (c < 0.0 || c > 1.0) throw InvalidArgument("band colours must lie in [0,1]");
        if (b->noise < 0.0) throw InvalidArgument("noise must be non-negative");
    }
    if (spec.salt_fraction < 0.0 || spec.salt_fraction > 1.0) throw InvalidArgument("salt fraction must lie in [0,1]");
    const double shore_px = spec.shore_height * spec.height;
    for (int x = 0; x < spec.width; ++x) {
        const double e = edge_row_at(spec, x);
        if (e - shore_px < 1.0 || e > spec.height - 1.0) {
            throw InvalidArgument("bands must be ordered sky above shore above water inside the frame (column " +
                                  std::to_string(x) + ")");
        }
    }
    for (std::size_t n = 0; n < spec.obstacles.size(); ++n) {
        const auto& o = spec.obstacles[n];
        if (o.w < 1 || o.h < 1) throw InvalidArgument("obstacle sizes must be positive");
        if (synth::distance(o.color, spec.water.color) < spec.min_contrast) {
            throw InvalidArgument("obstacle " + std::to_string(n) + " has less than the minimum contrast to water");
        }
        for (int t = 0; t < spec.frames; ++t) {
            const BoundingBox b = obstacle_box_at(o, t);
            if (b.x < 0 || b.y < 0 || b.right() > spec.width || b.bottom() > spec.height) {
                throw InvalidArgument("obstacle " + std::to_string(n) + " leaves the frame at frame " + std::to_string(t));
            }
            for (int x = b.x; x < b.right(); ++x) {
                if (b.y < first_water_row(spec, x)) {
                    throw InvalidArgument("obstacle " + std::to_string(n) + " is not inside the water at frame " +
                                          std::to_string(t));
                }
            }
        }
    }
    for (const auto& l : spec.large_obstacles) {
        const auto& b = l.box;
        if (b.w < 1 || b.h < 1 || b.x < 0 || b.y < 0 || b.right() > spec.width || b.bottom() > spec.height) {
            throw InvalidArgument("large obstacle outside the frame");
        }
    }
    if (spec.glitter && (spec.glitter->density < 0.0 || spec.glitter->density > 1.0)) {
        throw InvalidArgument("glitter density must lie in [0,1]");
    }
}

/// Renders every frame of the scene with exact annotations. Deterministic in `spec`.
inline std::vector<SyntheticFrame> generate_sequence(const SceneSpec& spec)
{
    validate(spec);
    const int w = spec.width;
    const int h = spec.height;
    const double shore_px = spec.shore_height * h;
    std::vector<int> water_top(static_cast<std::size_t>(w));
    std::vector<int> shore_top(static_cast<std::size_t>(w));
    for (int x = 0; x < w; ++x) {
        water_top[x] = first_water_row(spec, x);
        shore_top[x] = static_cast<int>(std::ceil(edge_row_at(spec, x) - shore_px));
    }

    FrameAnnotation base;
    base.edge_polygon = water_polygon(spec);
    for (const auto& l : spec.large_obstacles) base.large_obstacles.push_back(l.box);
    if (spec.glitter) base.glitter.push_back(spec.glitter->region);

    ImageU8 labels(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) labels.at(x, y) = y >= water_top[x] ? 1 : (y >= shore_top[x] ? 2 : 3);

    std::vector<SyntheticFrame> frames;
    frames.reserve(static_cast<std::size_t>(spec.frames));
    for (int t = 0; t < spec.frames; ++t) {
        std::mt19937_64 rng(synth::frame_seed(spec.seed, t));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        // Colour and noise sigma per pixel before noise.
        std::vector<Color3> base_color(static_cast<std::size_t>(w) * h);
        std::vector<double> sigma(base_color.size());
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const Band& b = y >= water_top[x] ? spec.water : (y >= shore_top[x] ? spec.shore : spec.sky);
                base_color[static_cast<std::size_t>(y) * w + x] = b.color;
                sigma[static_cast<std::size_t>(y) * w + x] = b.noise;
            }
        }
        auto paint = [&](const BoundingBox& box, const Color3& c, double s) {
            for (int y = std::max(0, box.y); y < std::min(h, box.bottom()); ++y)
                for (int x = std::max(0, box.x); x < std::min(w, box.right()); ++x) {
                    base_color[static_cast<std::size_t>(y) * w + x] = c;
                    sigma[static_cast<std::size_t>(y) * w + x] = s;
                }
        };
        SyntheticFrame frame;
        frame.annotation = base;
        frame.labels = labels;
        auto unlabel = [&](const BoundingBox& box) {
            for (int y = std::max(0, box.y); y < std::min(h, box.bottom()); ++y)
                for (int x = std::max(0, box.x); x < std::min(w, box.right()); ++x) frame.labels.at(x, y) = 0;
        };
        for (const auto& l : spec.large_obstacles) {
            paint(l.box, l.color, spec.shore.noise);
            unlabel(l.box);
        }
        for (const auto& o : spec.obstacles) {
            const BoundingBox b = obstacle_box_at(o, t);
            paint(b, o.color, spec.water.noise);
            unlabel(b);
            frame.annotation.small_obstacles.push_back(b);
        }

        frame.image = ImageU8(w, h, 3);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                Color3 c = base_color[i];
                for (double& v : c) v += sigma[i] * gauss(rng);
                if (spec.glitter && y >= water_top[x]) {
                    const auto& g = spec.glitter->region;
                    const bool inside = x >= g.x && x < g.right() && y >= g.y && y < g.bottom();
                    if (inside && unit(rng) < spec.glitter->density) {
                        const double v = 0.95 + 0.05 * unit(rng);
                        c = {v, v, v};
                    }
                }
                if (spec.salt_fraction > 0.0 && unit(rng) < spec.salt_fraction) {
                    c = {unit(rng), unit(rng), unit(rng)};
                }
                for (int ch = 0; ch < 3; ++ch) {
                    const double v = std::round(std::clamp(c[ch], 0.0, 1.0) * 255.0);
                    frame.image.at(x, y, ch) = static_cast<std::uint8_t>(v);
                }
            }
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Randomised scene suites

struct SuiteOptions {
    int width = 160;
    int height = 120;
    int frames = 1;
    double noise = 0.05;
    double salt_fraction = 0.0;
    int min_obstacles = 1;
    int max_obstacles = 2;
    /// Obstacle side range in working pixels.
    int min_obstacle_working = 5;
    int max_obstacle_working = 6;
    int working_size = 50;
    /// Largest per-frame obstacle speed, in working pixels.
    double max_speed_working = 1.0;
    double min_contrast = 0.3;
};

namespace synth {

inline Color3 random_color(std::mt19937_64& rng, const Color3& lo, const Color3& hi)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return {lo[0] + (hi[0] - lo[0]) * unit(rng), lo[1] + (hi[1] - lo[1]) * unit(rng),
            lo[2] + (hi[2] - lo[2]) * unit(rng)};
}

} // namespace synth

/// A random but valid maritime scene: bright sky, darker shore band, bluish
/// water, and non-overlapping obstacles well inside the water.
inline SceneSpec random_scene(std::uint64_t seed, const SuiteOptions& opt)
{
    std::mt19937_64 rng(synth::splitmix64(seed));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    SceneSpec spec;
    spec.seed = seed;
    spec.width = opt.width;
    spec.height = opt.height;
    spec.frames = opt.frames;
    spec.min_contrast = opt.min_contrast;
    spec.salt_fraction = opt.salt_fraction;

    do {
        spec.sky.color = synth::random_color(rng, {0.55, 0.65, 0.75}, {0.85, 0.92, 1.0});
        spec.shore.color = synth::random_color(rng, {0.20, 0.22, 0.10}, {0.50, 0.50, 0.35});
        spec.water.color = synth::random_color(rng, {0.02, 0.12, 0.22}, {0.20, 0.40, 0.55});
    } while (synth::distance(spec.sky.color, spec.shore.color) < 0.25 ||
             synth::distance(spec.shore.color, spec.water.color) < 0.2);
    spec.sky.noise = spec.shore.noise = spec.water.noise = opt.noise;
    spec.edge.left = uniform(0.42, 0.55);
    if (unit(rng) < 0.5) {
        spec.edge.shape = EdgeShape::Slanted;
        spec.edge.right = std::clamp(spec.edge.left + uniform(-0.06, 0.06), 0.4, 0.57);
    } else {
        spec.edge.shape = EdgeShape::Flat;
        spec.edge.right = spec.edge.left;
    }
    spec.shore_height = std::min(spec.edge.left, spec.edge.right) - uniform(0.15, 0.22);

    const double px_x = static_cast<double>(opt.width) / opt.working_size;
    const double px_y = static_cast<double>(opt.height) / opt.working_size;
    const double lowest_edge = std::max(spec.edge.left, spec.edge.right) * opt.height;
    const double merge_clearance = 5.0; // working pixels, beyond the default merge gap

    std::uniform_int_distribution<int> count_dist(opt.min_obstacles, opt.max_obstacles);
    std::uniform_int_distribution<int> side_dist(opt.min_obstacle_working, opt.max_obstacle_working);
    const int wanted = count_dist(rng);
    for (int attempt = 0; attempt < 200 && static_cast<int>(spec.obstacles.size()) < wanted; ++attempt) {
        ObstacleSpec o;
        o.w = static_cast<int>(std::lround(side_dist(rng) * px_x));
        o.h = static_cast<int>(std::lround(side_dist(rng) * px_y));
        do {
            o.color = synth::random_color(rng, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
        } while (synth::distance(o.color, spec.water.color) < opt.min_contrast + 0.1 ||
                 synth::distance(o.color, spec.shore.color) < 0.1);
        o.vx = uniform(-opt.max_speed_working, opt.max_speed_working) * px_x;
        o.vy = uniform(-0.3, 0.3) * opt.max_speed_working * px_y;

        const double top_min = lowest_edge + 0.05 * opt.height;
        const double top_max = opt.height - 3.0 * px_y - o.h;
        const double left_min = 3.0 * px_x;
        const double left_max = opt.width - 3.0 * px_x - o.w;
        if (top_max <= top_min || left_max <= left_min) continue;
        o.x = uniform(left_min, left_max);
        o.y = uniform(top_min, top_max);

        bool fits = true;
        for (int t = 0; t < opt.frames && fits; ++t) {
            const BoundingBox b = obstacle_box_at(o, t);
            fits = b.x >= left_min - 0.5 && b.right() <= opt.width - 3.0 * px_x + 0.5 && b.y >= top_min - 0.5 &&
                   b.bottom() <= opt.height - 3.0 * px_y + 0.5;
            for (const auto& other : spec.obstacles) {
                const BoundingBox ob = obstacle_box_at(other, t);
                const double gx = std::max(0, std::max(b.x, ob.x) - std::min(b.right(), ob.right())) / px_x;
                const double gy = std::max(0, std::max(b.y, ob.y) - std::min(b.bottom(), ob.bottom())) / px_y;
                if (std::max(gx, gy) < merge_clearance) fits = false;
            }
        }
        if (fits) spec.obstacles.push_back(o);
    }
    return spec;
}

/// Training examples (frame + label image) from random scenes without obstacles.
inline std::vector<SyntheticFrame> random_training_frames(std::uint64_t seed, int count, SuiteOptions opt)
{
    opt.min_obstacles = opt.max_obstacles = 0;
    opt.frames = 1;
    std::vector<SyntheticFrame> out;
    for (int i = 0; i < count; ++i) {
        auto frames = generate_sequence(random_scene(synth::splitmix64(seed + static_cast<std::uint64_t>(i)), opt));
        out.push_back(std::move(frames.front()));
    }
    return out;
}

} // namespace usvseg
