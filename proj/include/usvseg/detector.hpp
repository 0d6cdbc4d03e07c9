#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "usvseg/em.hpp"
#include "usvseg/error.hpp"
#include "usvseg/geometry.hpp"
#include "usvseg/imaging.hpp"
#include "usvseg/mixture.hpp"

namespace usvseg {

/// SSM is the full model; UGM drops the MRF; UGM_col also drops spatial features.
enum class Mode { SSM, UGM, UGMCol };

inline std::string_view to_string(Mode mode)
{
    switch (mode) {
    case Mode::SSM: return "ssm";
    case Mode::UGM: return "ugm";
    case Mode::UGMCol: return "ugm_col";
    }
    return "ssm";
}

inline Mode parse_mode(std::string_view name)
{
    if (name == "ssm") return Mode::SSM;
    if (name == "ugm") return Mode::UGM;
    if (name == "ugm_col") return Mode::UGMCol;
    throw InvalidArgument("unknown mode '" + std::string(name) + "'");
}

inline FeatureMode feature_mode_for(Mode mode) { return mode == Mode::UGMCol ? FeatureMode::ColorOnly : FeatureMode::Full; }

struct DetectorConfig {
    int working_size = 50;
    /// Soft-reset weight of the previous frame's model.
    double alpha = 0.6;
    /// Initial prior of the uniform component.
    double uniform_prior = 0.01;
    /// Boxes closer than this fraction of the working diagonal are merged.
    double merge_gap = 0.05;
    /// Smallest obstacle blob, in working pixels.
    int min_blob_area = 1;
    EmConfig em;
    Colorspace colorspace = Colorspace::YCrCb;
    Mode mode = Mode::SSM;

    void validate() const
    {
        if (working_size < 5) throw InvalidArgument("working size must be at least 5 pixels");
        if (alpha < 0.0 || alpha > 1.0) throw InvalidArgument("alpha must lie in [0,1]");
        if (!(uniform_prior > 0.0 && uniform_prior < 0.25)) throw InvalidArgument("uniform prior must lie in (0, 0.25)");
        if (merge_gap < 0.0) throw InvalidArgument("merge gap must be non-negative");
        if (min_blob_area < 1) throw InvalidArgument("minimum blob area must be at least 1");
        em.validate();
    }

    /// The EM settings with the MRF switched according to the mode.
    [[nodiscard]] EmConfig effective_em() const
    {
        EmConfig cfg = em;
        cfg.use_mrf = mode == Mode::SSM;
        return cfg;
    }
};

// ---------------------------------------------------------------------------
// Initialisation

/// Row ranges [begin, end) of the three initialisation bands, indexed by component.
inline std::array<std::pair<int, int>, kGaussians> init_regions(int height)
{
    const auto at = [height](double f) { return static_cast<int>(std::lround(f * height)); };
    return {{
        {at(0.6), height}, // water: bottom band
        {at(0.2), at(0.4)}, // middle band
        {0, at(0.2)},       // top band
    }};
}

struct FirstFrameInit {
    ObservedInit observed;
    CategoricalField prior;
};

/// Fits one Gaussian per horizontal band (the 0.4-0.6 band is skipped) and
/// builds the flat initial prior field.
inline FirstFrameInit init_first_frame(const FeatureField& features, double uniform_prior, double regularization)
{
    const int d = features.dim();
    const int w = features.width;
    const auto regions = init_regions(features.height);
    FirstFrameInit out;
    long total = 0;
    std::array<long, kGaussians> counts{};
    for (int k = 0; k < kGaussians; ++k) {
        const auto [begin, end] = regions[k];
        const long n = static_cast<long>(std::max(0, end - begin)) * w;
        if (n < d + 1) {
            throw InvalidArgument("initialisation band " + std::to_string(k + 1) + " has " + std::to_string(n) +
                                  " pixels, fewer than d+1");
        }
        // Rows are contiguous in the feature matrix.
        const Matrix samples = features.values.middleCols(static_cast<Eigen::Index>(begin) * w, n);
        out.observed.components[k] = fit_gaussian(samples, regularization);
        counts[k] = n;
        total += n;
    }
    for (int k = 0; k < kGaussians; ++k) {
        out.observed.weights[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
    }
    const double g = (1.0 - uniform_prior) / 3.0;
    out.prior = CategoricalField::constant(features.width, features.height, {g, g, g, uniform_prior});
    return out;
}

/// Zero-order soft reset: each component is the moment-matched merge of the
/// previous estimate (weight alpha) and the freshly observed one.
inline MixtureParams soft_reset(const MixtureParams& previous, const ObservedInit& observed, double alpha)
{
    MixtureParams out = previous;
    for (int k = 0; k < kGaussians; ++k) {
        out.components[k] = merge_moment_match(previous.components[k], observed.components[k], alpha);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Labelling and blobs

/// 1 where the water component has the largest smoothed posterior; ties go to water.
inline Mask water_mask_working(const CategoricalField& q_hat)
{
    Mask mask(q_hat.width, q_hat.height, 1, 0);
    for (int i = 0; i < q_hat.size(); ++i) {
        const double water = q_hat(kWater, i);
        bool is_water = true;
        for (int k = 1; k < kComponents; ++k) {
            if (q_hat(k, i) > water) {
                is_water = false;
                break;
            }
        }
        mask.data[i] = is_water ? 1 : 0;
    }
    return mask;
}

/// 8-connected labelling of pixels equal to `value`. Labels start at 1 in
/// raster order of each component's first pixel; 0 marks other pixels.
struct Labeling {
    std::vector<int> labels;
    std::vector<long> areas; ///< areas[l-1] is the area of label l
};

inline Labeling label_components(const Mask& mask, std::uint8_t value)
{
    const int w = mask.width;
    const int h = mask.height;
    Labeling out;
    out.labels.assign(mask.pixel_count(), 0);
    std::deque<int> queue;
    for (int start = 0; start < w * h; ++start) {
        if (mask.data[start] != value || out.labels[start] != 0) continue;
        const int label = static_cast<int>(out.areas.size()) + 1;
        long area = 0;
        out.labels[start] = label;
        queue.push_back(start);
        while (!queue.empty()) {
            const int p = queue.front();
            queue.pop_front();
            ++area;
            const int px = p % w;
            const int py = p / w;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = px + dx;
                    const int ny = py + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const int q = ny * w + nx;
                    if (mask.data[q] == value && out.labels[q] == 0) {
                        out.labels[q] = label;
                        queue.push_back(q);
                    }
                }
            }
        }
        out.areas.push_back(area);
    }
    return out;
}

struct RegionResult {
    Mask region;
    bool found = false;
};

/// The 8-connected component of ones with the largest area (first in raster order on ties).
inline RegionResult largest_component(const Mask& mask)
{
    const Labeling lab = label_components(mask, 1);
    RegionResult out{Mask(mask.width, mask.height, 1, 0), false};
    if (lab.areas.empty()) {
        return out;
    }
    const auto best = std::max_element(lab.areas.begin(), lab.areas.end()) - lab.areas.begin();
    const int label = static_cast<int>(best) + 1;
    for (std::size_t i = 0; i < lab.labels.size(); ++i) {
        out.region.data[i] = lab.labels[i] == label ? 1 : 0;
    }
    out.found = true;
    return out;
}

/// Tight boxes of the holes of `region`: 8-connected non-region components that
/// do not reach the image border, with area at least `min_blob_area`.
inline std::vector<BoundingBox> extract_obstacles(const Mask& region, int min_blob_area)
{
    const int w = region.width;
    const int h = region.height;
    const Labeling lab = label_components(region, 0);
    const std::size_t n = lab.areas.size();
    std::vector<bool> touches_border(n, false);
    std::vector<std::array<int, 4>> extent(n, {w, h, -1, -1});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int l = lab.labels[static_cast<std::size_t>(y) * w + x];
            if (l == 0) continue;
            auto& e = extent[l - 1];
            e[0] = std::min(e[0], x);
            e[1] = std::min(e[1], y);
            e[2] = std::max(e[2], x);
            e[3] = std::max(e[3], y);
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) touches_border[l - 1] = true;
        }
    }
    std::vector<BoundingBox> boxes;
    for (std::size_t l = 0; l < n; ++l) {
        if (touches_border[l] || lab.areas[l] < min_blob_area) continue;
        const auto& e = extent[l];
        boxes.push_back({e[0], e[1], e[2] - e[0] + 1, e[3] - e[1] + 1});
    }
    return boxes;
}

/// Merges boxes whose gap is at most merge_gap times the image diagonal, to a fixpoint.
/// Output is sorted by (x, y, w, h).
inline std::vector<BoundingBox> suppress_merge(std::vector<BoundingBox> boxes, double merge_gap, int width, int height)
{
    const double threshold = merge_gap * std::hypot(static_cast<double>(width), static_cast<double>(height));
    bool merged = true;
    while (merged) {
        merged = false;
        std::sort(boxes.begin(), boxes.end());
        for (std::size_t i = 0; i < boxes.size() && !merged; ++i) {
            for (std::size_t j = i + 1; j < boxes.size(); ++j) {
                if (box_gap(boxes[i], boxes[j]) <= threshold) {
                    boxes[i] = box_union(boxes[i], boxes[j]);
                    boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(j));
                    merged = true;
                    break;
                }
            }
        }
    }
    std::sort(boxes.begin(), boxes.end());
    return boxes;
}

/// Topmost region row per column; columns without region pixels get the image height.
inline std::vector<int> water_edge(const Mask& region)
{
    std::vector<int> edge(static_cast<std::size_t>(region.width), region.height);
    for (int x = 0; x < region.width; ++x) {
        for (int y = 0; y < region.height; ++y) {
            if (region.at(x, y)) {
                edge[x] = y;
                break;
            }
        }
    }
    return edge;
}

/// Full-resolution box covering exactly the pixels that nearest-neighbour
/// upscaling maps into the working box.
inline BoundingBox upscale_box(const BoundingBox& box, int working_w, int working_h, int full_w, int full_h)
{
    auto span = [](int begin, int end, int src, int dst) {
        int lo = dst;
        int hi = -1;
        for (int v = 0; v < dst; ++v) {
            const int s = nearest_source_index(v, src, dst);
            if (s >= begin && s < end) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        return std::pair{lo, hi};
    };
    const auto [x0, x1] = span(box.x, box.right(), working_w, full_w);
    const auto [y0, y1] = span(box.y, box.bottom(), working_h, full_h);
    if (x1 < x0 || y1 < y0) {
        return {0, 0, 0, 0};
    }
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

// ---------------------------------------------------------------------------
// Per-frame pipeline

struct DetectorState {
    std::optional<MixtureParams> prev_params;
    std::optional<CategoricalField> prev_q_hat;
    WeakPriors priors; ///< already adapted to the feature dimension of `config.mode`
    DetectorConfig config;
    MrfKernels kernels;

    static DetectorState create(const WeakPriors& priors, const DetectorConfig& config)
    {
        config.validate();
        DetectorState s;
        const int d = feature_mode_for(config.mode) == FeatureMode::Full ? 5 : 3;
        s.priors = priors.for_dim(d);
        s.config = config;
        s.kernels = make_mrf_kernels(config.working_size);
        return s;
    }

    [[nodiscard]] bool has_history() const { return prev_params.has_value(); }

    /// Forget the temporal model; the next frame initialises from the band split alone.
    void reset()
    {
        prev_params.reset();
        prev_q_hat.reset();
    }
};

struct StageTiming {
    double preprocess_ms = 0.0;
    double fit_ms = 0.0;
    double detect_ms = 0.0;

    [[nodiscard]] double total_ms() const { return preprocess_ms + fit_ms + detect_ms; }
};

struct FrameResult {
    bool ok = true;
    std::string error;
    Mask water_mask;          ///< full resolution, 1 = water
    std::vector<int> edge;    ///< full resolution, one row index per column
    std::vector<BoundingBox> obstacles; ///< full resolution
    Mask working_mask;        ///< largest water region at working resolution
    std::vector<BoundingBox> working_obstacles;
    FitResult fit;
    StageTiming timing;
};

/// Obstacle map, water edge and in-water obstacles from a fitted model.
/// Fills everything in `result` except `fit` and `timing`.
inline void detect_from_fit(const CategoricalField& q_hat, const DetectorConfig& config, int full_w, int full_h,
                            FrameResult& result)
{
    const Mask labels = water_mask_working(q_hat);
    const RegionResult region = largest_component(labels);
    result.working_mask = region.region;
    result.working_obstacles.clear();
    if (region.found) {
        result.working_obstacles = suppress_merge(extract_obstacles(region.region, config.min_blob_area),
                                                  config.merge_gap, q_hat.width, q_hat.height);
    }
    result.water_mask = resize(region.region, full_w, full_h, Interp::Nearest);
    result.obstacles.clear();
    for (const auto& b : result.working_obstacles) {
        result.obstacles.push_back(upscale_box(b, q_hat.width, q_hat.height, full_w, full_h));
    }
    result.edge = water_edge(result.water_mask);
}

/// One step of the sequential detector. On a numerical failure the frame is
/// flagged and the returned state equals the input state.
inline std::pair<FrameResult, DetectorState> process_frame(const DetectorState& state, const ImageU8& frame)
{
    using clock = std::chrono::steady_clock;
    const auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };
    const DetectorConfig& cfg = state.config;
    const int ws = cfg.working_size;
    FrameResult result;
    DetectorState next = state;

    if (frame.empty()) {
        throw InvalidArgument("empty frame");
    }

    try {
        auto t0 = clock::now();
        const FeatureField features = working_features(frame, ws, ws, cfg.colorspace, feature_mode_for(cfg.mode));
        const FirstFrameInit first = init_first_frame(features, cfg.uniform_prior, cfg.em.regularization);
        MixtureParams init_params;
        CategoricalField init_prior;
        if (state.has_history()) {
            init_params = soft_reset(*state.prev_params, first.observed, cfg.alpha);
            init_prior = state.prev_q_hat->scaled(0.5);
        } else {
            for (int k = 0; k < kGaussians; ++k) init_params.components[k] = first.observed.components[k];
            init_prior = first.prior;
        }
        init_params.uniform_density = uniform_density_for(ws, ws, feature_mode_for(cfg.mode));
        result.timing.preprocess_ms = ms_since(t0);

        t0 = clock::now();
        result.fit = fit(features, init_params, init_prior, state.priors, state.kernels, cfg.effective_em());
        result.timing.fit_ms = ms_since(t0);

        t0 = clock::now();
        detect_from_fit(result.fit.q_hat, cfg, frame.width, frame.height, result);
        result.timing.detect_ms = ms_since(t0);
    } catch (const NumericalError& e) {
        result = FrameResult{};
        result.ok = false;
        result.error = e.what();
        result.water_mask = Mask(frame.width, frame.height, 1, 0);
        result.edge.assign(static_cast<std::size_t>(frame.width), frame.height);
        return {std::move(result), state};
    }

    next.prev_params = result.fit.params;
    next.prev_q_hat = result.fit.q_hat;
    return {std::move(result), std::move(next)};
}

/// Frame with the water edge drawn in green and obstacle boxes in yellow.
inline ImageU8 render_overlay(const ImageU8& frame, const FrameResult& result)
{
    ImageU8 out = to_rgb(frame);
    auto put = [&out](int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        if (x < 0 || y < 0 || x >= out.width || y >= out.height) return;
        out.at(x, y, 0) = r;
        out.at(x, y, 1) = g;
        out.at(x, y, 2) = b;
    };
    for (int x = 0; x < static_cast<int>(result.edge.size()); ++x) {
        put(x, result.edge[x], 0, 255, 0);
        put(x, result.edge[x] - 1, 0, 255, 0);
    }
    for (const auto& b : result.obstacles) {
        for (int x = b.x; x < b.right(); ++x) {
            put(x, b.y, 255, 255, 0);
            put(x, b.bottom() - 1, 255, 255, 0);
        }
        for (int y = b.y; y < b.bottom(); ++y) {
            put(b.x, y, 255, 255, 0);
            put(b.right() - 1, y, 255, 255, 0);
        }
    }
    return out;
}

} // namespace usvseg
