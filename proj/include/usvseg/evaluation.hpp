#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "usvseg/error.hpp"
#include "usvseg/geometry.hpp"

namespace usvseg {

/// Ground truth for one frame. `edge_polygon` delimits the water surface;
/// large obstacles straddle the water edge, small ones lie fully in water.
struct FrameAnnotation {
    std::vector<Point2> edge_polygon;
    std::vector<BoundingBox> large_obstacles;
    std::vector<BoundingBox> small_obstacles;
    std::vector<BoundingBox> glitter;

    friend bool operator==(const FrameAnnotation&, const FrameAnnotation&) = default;
};

struct MatchedPair {
    int detection = 0;
    int ground_truth = 0;
    double overlap = 0.0;
};

struct MatchOutcome {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    std::vector<MatchedPair> pairs;
};

struct Metrics {
    double edg = 0.0; ///< mean per-frame edge RMSE, pixels
    double prec = 0.0;
    double rec = 0.0;
    double f = 0.0;
    double afp = 0.0; ///< false positives per frame
    int frames = 0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
};

enum class GlitterMode { Ignore, Account };

inline GlitterMode parse_glitter_mode(std::string_view name)
{
    if (name == "ignore") return GlitterMode::Ignore;
    if (name == "account") return GlitterMode::Account;
    throw InvalidArgument("unknown glitter mode '" + std::string(name) + "'");
}

struct EvalOptions {
    /// Objects with min(w, h) below this are dropped (0 keeps everything).
    double min_size = 0.0;
    GlitterMode glitter = GlitterMode::Account;
    /// Half-height of the ignore band around the edge, as a fraction of the frame height.
    double band_fraction = 0.05;
    double min_overlap = 0.3;
};

namespace detail {

/// Topmost crossing of the vertical line at `x` with the polygon outline, if any.
inline std::optional<double> polygon_top_at(const std::vector<Point2>& poly, double x)
{
    std::optional<double> top;
    const std::size_t n = poly.size();
    for (std::size_t j = 0; j < n; ++j) {
        const Point2& a = poly[j];
        const Point2& b = poly[(j + 1) % n];
        if (x < std::min(a.x, b.x) || x > std::max(a.x, b.x)) continue;
        double y = 0.0;
        if (a.x == b.x) {
            y = std::min(a.y, b.y);
        } else {
            const double t = (x - a.x) / (b.x - a.x);
            y = a.y + t * (b.y - a.y);
        }
        top = top ? std::min(*top, y) : y;
    }
    return top;
}

} // namespace detail

/// Per-column top of the annotated water surface, with the area covered by
/// large obstacles removed from the water: where a large obstacle box spans
/// the water top in a column, the top moves down to the box bottom.
/// Columns without water hold the frame height.
inline std::vector<double> refine_gt_edge(const FrameAnnotation& ann, int frame_w, int frame_h)
{
    const auto& poly = ann.edge_polygon;
    if (poly.size() < 2) {
        throw InvalidArgument("edge polygon needs at least two vertices");
    }
    const auto [lo, hi] = std::minmax_element(poly.begin(), poly.end(),
                                              [](const Point2& a, const Point2& b) { return a.x < b.x; });
    if (!(hi->x > lo->x)) {
        throw InvalidArgument("degenerate edge polygon: zero-width span");
    }
    std::vector<double> edge(static_cast<std::size_t>(frame_w), static_cast<double>(frame_h));
    for (int x = 0; x < frame_w; ++x) {
        if (const auto top = detail::polygon_top_at(poly, x)) {
            edge[x] = std::clamp(*top, 0.0, static_cast<double>(frame_h));
        }
    }
    for (int x = 0; x < frame_w; ++x) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (const auto& b : ann.large_obstacles) {
                if (x < b.x || x >= b.right()) continue;
                if (b.y <= edge[x] && edge[x] < b.bottom()) {
                    edge[x] = std::min(static_cast<double>(b.bottom()), static_cast<double>(frame_h));
                    moved = true;
                }
            }
        }
    }
    return edge;
}

inline double edge_rmse(std::span<const double> estimate, std::span<const double> truth)
{
    if (estimate.size() != truth.size()) {
        throw InvalidArgument("edge profiles differ in column count");
    }
    if (estimate.empty()) {
        throw InvalidArgument("empty edge profile");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        const double d = estimate[i] - truth[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(estimate.size()));
}

inline std::vector<double> to_profile(std::span<const int> edge) { return {edge.begin(), edge.end()}; }

/// Drops every box whose centre lies strictly closer than `band` pixels
/// (vertically) to the edge profile at the centre column.
inline std::pair<std::vector<BoundingBox>, std::vector<BoundingBox>>
apply_ignore_band(const std::vector<BoundingBox>& dets, const std::vector<BoundingBox>& gts,
                  std::span<const double> gt_edge, double band)
{
    if (gt_edge.empty()) {
        throw InvalidArgument("empty edge profile");
    }
    const auto keep = [&](const BoundingBox& b) {
        const int col = std::clamp(static_cast<int>(std::floor(b.center_x())), 0, static_cast<int>(gt_edge.size()) - 1);
        return std::abs(b.center_y() - gt_edge[col]) >= band;
    };
    std::pair<std::vector<BoundingBox>, std::vector<BoundingBox>> out;
    std::copy_if(dets.begin(), dets.end(), std::back_inserter(out.first), keep);
    std::copy_if(gts.begin(), gts.end(), std::back_inserter(out.second), keep);
    return out;
}

/// Removes detections centred inside any glitter region.
inline std::vector<BoundingBox> drop_glitter(const std::vector<BoundingBox>& dets, const std::vector<BoundingBox>& glitter)
{
    std::vector<BoundingBox> out;
    for (const auto& d : dets) {
        const double cx = d.center_x();
        const double cy = d.center_y();
        const bool inside = std::any_of(glitter.begin(), glitter.end(), [&](const BoundingBox& g) {
            return cx >= g.x && cx < g.right() && cy >= g.y && cy < g.bottom();
        });
        if (!inside) out.push_back(d);
    }
    return out;
}

/// Greedy one-to-one matching in descending IoU order; pairs below
/// `min_overlap` never match.
inline MatchOutcome match_detections(const std::vector<BoundingBox>& dets, const std::vector<BoundingBox>& gts,
                                     double min_overlap = 0.3)
{
    std::vector<MatchedPair> candidates;
    for (int d = 0; d < static_cast<int>(dets.size()); ++d) {
        for (int g = 0; g < static_cast<int>(gts.size()); ++g) {
            const double o = iou(dets[d], gts[g]);
            if (o >= min_overlap && o > 0.0) candidates.push_back({d, g, o});
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const MatchedPair& a, const MatchedPair& b) { return a.overlap > b.overlap; });
    std::vector<bool> det_used(dets.size(), false);
    std::vector<bool> gt_used(gts.size(), false);
    MatchOutcome out;
    for (const auto& c : candidates) {
        if (det_used[c.detection] || gt_used[c.ground_truth]) continue;
        det_used[c.detection] = true;
        gt_used[c.ground_truth] = true;
        out.pairs.push_back(c);
    }
    out.tp = static_cast<int>(out.pairs.size());
    out.fp = static_cast<int>(dets.size()) - out.tp;
    out.fn = static_cast<int>(gts.size()) - out.tp;
    return out;
}

/// Minimum-size filtering: objects with min(w, h) < a go, and so does any
/// detection overlapping a removed ground truth by IoU >= 0.3.
inline std::pair<std::vector<BoundingBox>, std::vector<BoundingBox>>
size_filter(const std::vector<BoundingBox>& dets, const std::vector<BoundingBox>& gts, double a,
            double min_overlap = 0.3)
{
    const auto small = [a](const BoundingBox& b) { return std::min(b.w, b.h) < a; };
    std::pair<std::vector<BoundingBox>, std::vector<BoundingBox>> out;
    std::vector<BoundingBox> removed;
    for (const auto& g : gts) {
        (small(g) ? removed : out.second).push_back(g);
    }
    for (const auto& d : dets) {
        if (small(d)) continue;
        const bool shadowed = std::any_of(removed.begin(), removed.end(),
                                          [&](const BoundingBox& g) { return iou(d, g) >= min_overlap; });
        if (!shadowed) out.first.push_back(d);
    }
    return out;
}

inline Metrics aggregate(std::span<const MatchOutcome> outcomes, std::span<const double> edge_rmses)
{
    if (outcomes.empty()) {
        throw InvalidArgument("cannot aggregate zero frames");
    }
    if (edge_rmses.size() != outcomes.size()) {
        throw InvalidArgument("one edge error per frame is required");
    }
    Metrics m;
    m.frames = static_cast<int>(outcomes.size());
    for (const auto& o : outcomes) {
        m.tp += o.tp;
        m.fp += o.fp;
        m.fn += o.fn;
    }
    double edg = 0.0;
    for (double e : edge_rmses) edg += e;
    m.edg = edg / static_cast<double>(edge_rmses.size());
    m.prec = m.tp + m.fp > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
    m.rec = m.tp + m.fn > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
    m.f = m.prec + m.rec > 0.0 ? 2.0 * m.prec * m.rec / (m.prec + m.rec) : 0.0;
    m.afp = static_cast<double>(m.fp) / m.frames;
    return m;
}

/// Probability of at least one detection in n_buf independent frames.
inline double p_success(double rec, int n_buf)
{
    if (rec < 0.0 || rec > 1.0) throw InvalidArgument("recall must lie in [0,1]");
    if (n_buf < 1) throw InvalidArgument("n_buf must be at least 1");
    return 1.0 - std::pow(1.0 - rec, n_buf);
}

struct FrameEvaluation {
    MatchOutcome outcome;
    double edge_rmse = 0.0;
};

/// Scores one frame: refined-edge RMSE, ignore band, glitter handling, size
/// filter, then matching.
inline FrameEvaluation evaluate_frame(const std::vector<BoundingBox>& detections, std::span<const int> estimated_edge,
                                      const FrameAnnotation& ann, int frame_w, int frame_h, const EvalOptions& opts)
{
    if (static_cast<int>(estimated_edge.size()) != frame_w) {
        throw InvalidArgument("estimated edge has " + std::to_string(estimated_edge.size()) + " columns, frame has " +
                              std::to_string(frame_w));
    }
    const std::vector<double> gt_edge = refine_gt_edge(ann, frame_w, frame_h);
    FrameEvaluation out;
    out.edge_rmse = edge_rmse(to_profile(estimated_edge), gt_edge);

    auto [dets, gts] = apply_ignore_band(detections, ann.small_obstacles, gt_edge, opts.band_fraction * frame_h);
    if (opts.glitter == GlitterMode::Ignore) {
        dets = drop_glitter(dets, ann.glitter);
    }
    if (opts.min_size > 0.0) {
        std::tie(dets, gts) = size_filter(dets, gts, opts.min_size, opts.min_overlap);
    }
    out.outcome = match_detections(dets, gts, opts.min_overlap);
    return out;
}

/// Aligned plain-text report.
inline std::string format_metrics_table(const Metrics& m, std::optional<std::pair<int, double>> success = {})
{
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%-8s %8s %8s %8s %8s %8s\n%-8s %8.2f %8.3f %8.3f %8.3f %8.3f\n"
                  "frames %d  TP %d  FP %d  FN %d\n",
                  "", "Edg", "Prec", "Rec", "F", "aFP", "result", m.edg, m.prec, m.rec, m.f, m.afp, m.frames, m.tp,
                  m.fp, m.fn);
    std::string out = buf;
    if (success) {
        std::snprintf(buf, sizeof buf, "p_success(n_buf=%d) %.4f\n", success->first, success->second);
        out += buf;
    }
    return out;
}

} // namespace usvseg
