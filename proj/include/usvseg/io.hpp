#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "usvseg/error.hpp"
#include "usvseg/evaluation.hpp"
#include "usvseg/geometry.hpp"
#include "usvseg/imaging/pnm.hpp"
#include "usvseg/mixture.hpp"
#include "usvseg/scene_synth.hpp"

namespace usvseg {

using nlohmann::json;

inline void to_json(json& j, const BoundingBox& b) { j = json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

inline void from_json(const json& j, BoundingBox& b)
{
    b.x = j.at("x").get<int>();
    b.y = j.at("y").get<int>();
    b.w = j.at("w").get<int>();
    b.h = j.at("h").get<int>();
}

inline void to_json(json& j, const FrameAnnotation& a)
{
    json poly = json::array();
    for (const auto& p : a.edge_polygon) poly.push_back({p.x, p.y});
    j = json{{"edge_polygon", poly},
             {"large_obstacles", a.large_obstacles},
             {"small_obstacles", a.small_obstacles},
             {"glitter", a.glitter}};
}

inline void from_json(const json& j, FrameAnnotation& a)
{
    a = FrameAnnotation{};
    for (const auto& p : j.at("edge_polygon")) {
        if (!p.is_array() || p.size() != 2) throw IoError("edge_polygon vertices must be [x, y] pairs");
        a.edge_polygon.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    if (j.contains("large_obstacles")) a.large_obstacles = j["large_obstacles"].get<std::vector<BoundingBox>>();
    if (j.contains("small_obstacles")) a.small_obstacles = j["small_obstacles"].get<std::vector<BoundingBox>>();
    if (j.contains("glitter")) a.glitter = j["glitter"].get<std::vector<BoundingBox>>();
}

// WeakPriors: {"d": int, "components": [{"mean": [...], "cov": [[...]]} x3]}

inline json priors_to_json(const WeakPriors& priors)
{
    json comps = json::array();
    for (const auto& c : priors.components) {
        std::vector<double> mean(c.mean.data(), c.mean.data() + c.mean.size());
        std::vector<std::vector<double>> cov;
        for (Eigen::Index r = 0; r < c.cov.rows(); ++r) {
            std::vector<double> row;
            for (Eigen::Index col = 0; col < c.cov.cols(); ++col) row.push_back(c.cov(r, col));
            cov.push_back(std::move(row));
        }
        comps.push_back({{"mean", mean}, {"cov", cov}});
    }
    return json{{"d", priors.dim()}, {"components", comps}};
}

inline WeakPriors priors_from_json(const json& j)
{
    try {
        const int d = j.at("d").get<int>();
        const auto& comps = j.at("components");
        if (d < 1) throw IoError("priors: d must be positive");
        if (!comps.is_array() || comps.size() != kGaussians) throw IoError("priors: exactly three components required");
        WeakPriors priors;
        for (int k = 0; k < kGaussians; ++k) {
            const auto mean = comps[k].at("mean").get<std::vector<double>>();
            const auto cov = comps[k].at("cov").get<std::vector<std::vector<double>>>();
            if (static_cast<int>(mean.size()) != d || static_cast<int>(cov.size()) != d) {
                throw IoError("priors: component " + std::to_string(k + 1) + " does not match d");
            }
            auto& g = priors.components[k];
            g.mean = Eigen::Map<const Vector>(mean.data(), d);
            g.cov.resize(d, d);
            for (int r = 0; r < d; ++r) {
                if (static_cast<int>(cov[r].size()) != d) throw IoError("priors: covariance must be d x d");
                for (int c = 0; c < d; ++c) g.cov(r, c) = cov[r][c];
            }
            if (Eigen::LLT<Matrix>(g.cov).info() != Eigen::Success) {
                throw IoError("priors: covariance of component " + std::to_string(k + 1) + " is not positive definite");
            }
        }
        return priors;
    } catch (const json::exception& e) {
        throw IoError(std::string("priors: ") + e.what());
    }
}

inline json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const json& j)
{
    write_file_bytes(path, j.dump(2) + "\n");
}

inline WeakPriors load_priors(const std::filesystem::path& path) { return priors_from_json(read_json_file(path)); }

inline void save_priors(const std::filesystem::path& path, const WeakPriors& priors)
{
    write_json_file(path, priors_to_json(priors));
}

inline FrameAnnotation load_annotation(const std::filesystem::path& path)
{
    try {
        return read_json_file(path).get<FrameAnnotation>();
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline void save_annotation(const std::filesystem::path& path, const FrameAnnotation& a)
{
    write_json_file(path, json(a));
}

inline std::vector<BoundingBox> load_boxes(const std::filesystem::path& path)
{
    try {
        return read_json_file(path).get<std::vector<BoundingBox>>();
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline void save_boxes(const std::filesystem::path& path, const std::vector<BoundingBox>& boxes)
{
    write_file_bytes(path, json(boxes).dump() + "\n");
}

/// Edge profile: one integer per column, space separated, on a single line.
inline std::string format_edge(const std::vector<int>& edge)
{
    std::string out;
    for (std::size_t i = 0; i < edge.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(edge[i]);
    }
    out += '\n';
    return out;
}

inline std::vector<int> parse_edge(const std::string& text)
{
    std::istringstream in(text);
    std::vector<int> edge;
    long v = 0;
    while (in >> v) edge.push_back(static_cast<int>(v));
    if (!in.eof()) throw IoError("edge profile contains a non-integer token");
    return edge;
}

inline std::vector<int> load_edge(const std::filesystem::path& path) { return parse_edge(read_file_bytes(path)); }

inline json metrics_to_json(const Metrics& m)
{
    return json{{"Edg", m.edg}, {"Prec", m.prec}, {"Rec", m.rec}, {"F", m.f}, {"aFP", m.afp},
                {"frames", m.frames}, {"TP", m.tp}, {"FP", m.fp}, {"FN", m.fn}};
}

// Scene specs for the synthetic generator. Every field is optional and
// defaults to SceneSpec's defaults.

inline Color3 color_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

inline json scene_to_json(const SceneSpec& s)
{
    auto band = [](const Band& b) { return json{{"color", b.color}, {"noise", b.noise}}; };
    json obstacles = json::array();
    for (const auto& o : s.obstacles) {
        obstacles.push_back({{"x", o.x}, {"y", o.y}, {"vx", o.vx}, {"vy", o.vy}, {"w", o.w}, {"h", o.h}, {"color", o.color}});
    }
    json large = json::array();
    for (const auto& l : s.large_obstacles) large.push_back({{"box", l.box}, {"color", l.color}});
    json j{{"seed", s.seed},
           {"width", s.width},
           {"height", s.height},
           {"frames", s.frames},
           {"sky", band(s.sky)},
           {"shore", band(s.shore)},
           {"water", band(s.water)},
           {"shore_height", s.shore_height},
           {"edge", {{"shape", std::string(to_string(s.edge.shape))}, {"left", s.edge.left}, {"right", s.edge.right}, {"steps", s.edge.steps}}},
           {"obstacles", obstacles},
           {"large_obstacles", large},
           {"salt_fraction", s.salt_fraction},
           {"min_contrast", s.min_contrast}};
    if (s.glitter) j["glitter"] = {{"region", s.glitter->region}, {"density", s.glitter->density}};
    return j;
}

inline SceneSpec scene_from_json(const json& j)
{
    try {
        SceneSpec s;
        s.seed = j.value("seed", s.seed);
        s.width = j.value("width", s.width);
        s.height = j.value("height", s.height);
        s.frames = j.value("frames", s.frames);
        auto band = [&j](const char* key, Band& b) {
            if (!j.contains(key)) return;
            const auto& v = j[key];
            if (v.contains("color")) b.color = color_from_json(v["color"]);
            b.noise = v.value("noise", b.noise);
        };
        band("sky", s.sky);
        band("shore", s.shore);
        band("water", s.water);
        s.shore_height = j.value("shore_height", s.shore_height);
        if (j.contains("edge")) {
            const auto& e = j["edge"];
            if (e.contains("shape")) s.edge.shape = parse_edge_shape(e["shape"].get<std::string>());
            s.edge.left = e.value("left", s.edge.left);
            s.edge.right = e.value("right", s.edge.shape == EdgeShape::Flat ? s.edge.left : s.edge.right);
            s.edge.steps = e.value("steps", s.edge.steps);
        }
        if (j.contains("obstacles")) {
            for (const auto& o : j["obstacles"]) {
                ObstacleSpec ob;
                ob.x = o.at("x").get<double>();
                ob.y = o.at("y").get<double>();
                ob.vx = o.value("vx", 0.0);
                ob.vy = o.value("vy", 0.0);
                ob.w = o.at("w").get<int>();
                ob.h = o.at("h").get<int>();
                ob.color = color_from_json(o.at("color"));
                s.obstacles.push_back(ob);
            }
        }
        if (j.contains("large_obstacles")) {
            for (const auto& l : j["large_obstacles"]) {
                s.large_obstacles.push_back({l.at("box").get<BoundingBox>(), color_from_json(l.at("color"))});
            }
        }
        if (j.contains("glitter")) {
            s.glitter = GlitterSpec{j["glitter"].at("region").get<BoundingBox>(), j["glitter"].value("density", 0.0)};
        }
        s.salt_fraction = j.value("salt_fraction", s.salt_fraction);
        s.min_contrast = j.value("min_contrast", s.min_contrast);
        return s;
    } catch (const json::exception& e) {
        throw IoError(std::string("scene spec: ") + e.what());
    }
}

} // namespace usvseg
