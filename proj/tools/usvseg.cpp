// usvseg: water segmentation and obstacle detection from the command line.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "usvseg/usvseg.hpp"

namespace fs = std::filesystem;
using namespace usvseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct DetectorFlags {
    int working_size = 50;
    double alpha = 0.6;
    std::string colorspace = "ycrcb";
    std::string mode = "ssm";
    int max_iters = 10;
    double tol = 1e-2;
    double merge_gap = 0.05;

    void add_to(CLI::App& app)
    {
        app.add_option("--working-size", working_size, "Side of the square working image in pixels");
        app.add_option("--alpha", alpha, "Soft-reset weight of the previous frame's model");
        app.add_option("--colorspace", colorspace, "rgb, hsv, lab or ycrcb");
        app.add_option("--mode", mode, "ssm, ugm or ugm_col");
        app.add_option("--max-iters", max_iters, "EM iteration cap");
        app.add_option("--tol", tol, "EM convergence threshold on the posterior change");
        app.add_option("--merge-gap", merge_gap, "Box merge distance as a fraction of the working diagonal");
    }

    [[nodiscard]] DetectorConfig config() const
    {
        DetectorConfig cfg;
        cfg.working_size = working_size;
        cfg.alpha = alpha;
        cfg.colorspace = parse_colorspace(colorspace);
        cfg.mode = parse_mode(mode);
        cfg.em.max_iters = max_iters;
        cfg.em.tol = tol;
        cfg.merge_gap = merge_gap;
        cfg.validate();
        return cfg;
    }
};

bool is_frame_file(const fs::path& p)
{
    const auto ext = p.extension().string();
    if (ext != ".ppm" && ext != ".pgm") return false;
    const auto stem = p.stem().string();
    for (const char* suffix : {"_labels", "_mask", "_overlay"}) {
        const std::string s(suffix);
        if (stem.size() >= s.size() && stem.compare(stem.size() - s.size(), s.size(), s) == 0) return false;
    }
    return true;
}

std::vector<fs::path> list_frames(const fs::path& dir)
{
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> frames;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && is_frame_file(entry.path())) frames.push_back(entry.path());
    std::sort(frames.begin(), frames.end());
    return frames;
}

void write_frame_outputs(const fs::path& out_dir, const std::string& stem, const FrameResult& r)
{
    save_image(out_dir / (stem + "_mask.pgm"), mask_to_gray(r.water_mask));
    write_file_bytes(out_dir / (stem + "_edge.txt"), format_edge(r.edge));
    save_boxes(out_dir / (stem + "_boxes.json"), r.obstacles);
}

double median(std::vector<double> v)
{
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_segment(const fs::path& frame_path, const fs::path& priors_path, const fs::path& out_dir, bool overlay,
                const DetectorFlags& flags)
{
    const DetectorConfig cfg = flags.config();
    const WeakPriors priors = load_priors(priors_path);
    const ImageU8 frame = load_image(frame_path);
    const DetectorState state = DetectorState::create(priors, cfg);
    const auto [result, next] = process_frame(state, frame);
    if (!result.ok) {
        std::cerr << "error: " << frame_path.string() << ": " << result.error << "\n";
        return kExitFailure;
    }
    fs::create_directories(out_dir);
    const std::string stem = frame_path.stem().string();
    write_frame_outputs(out_dir, stem, result);
    if (overlay) save_image(out_dir / (stem + "_overlay.ppm"), render_overlay(frame, result));
    std::cout << stem << ": " << result.obstacles.size() << " obstacles, " << result.fit.iterations
              << " EM iterations\n";
    return kExitOk;
}

int cmd_run(const fs::path& seq_dir, const fs::path& priors_path, const fs::path& out_dir, int reset_every,
            const DetectorFlags& flags)
{
    const DetectorConfig cfg = flags.config();
    const WeakPriors priors = load_priors(priors_path);
    const auto frames = list_frames(seq_dir);
    if (frames.empty()) throw IoError("no frames in " + seq_dir.string());
    if (reset_every < 0) throw InvalidArgument("--reset-every must be non-negative");
    fs::create_directories(out_dir);

    DetectorState state = DetectorState::create(priors, cfg);
    std::vector<double> pre, fit_ms, det, total;
    std::vector<int> iterations;
    nlohmann::json per_frame = nlohmann::json::array();
    int failures = 0;
    for (std::size_t n = 0; n < frames.size(); ++n) {
        const std::string stem = frames[n].stem().string();
        if (reset_every > 0 && n % static_cast<std::size_t>(reset_every) == 0) state.reset();
        FrameResult result;
        try {
            const ImageU8 frame = load_image(frames[n]);
            auto [r, next] = process_frame(state, frame);
            result = std::move(r);
            state = std::move(next);
            if (!result.ok) {
                std::cerr << "warning: " << stem << ": " << result.error << "\n";
                ++failures;
            }
        } catch (const Error& e) {
            std::cerr << "warning: " << stem << ": " << e.what() << "\n";
            ++failures;
            continue;
        }
        write_frame_outputs(out_dir, stem, result);
        if (!result.ok) continue;
        pre.push_back(result.timing.preprocess_ms);
        fit_ms.push_back(result.timing.fit_ms);
        det.push_back(result.timing.detect_ms);
        total.push_back(result.timing.total_ms());
        iterations.push_back(result.fit.iterations);
        per_frame.push_back({{"frame", stem},
                             {"preprocess_ms", result.timing.preprocess_ms},
                             {"fit_ms", result.timing.fit_ms},
                             {"detect_ms", result.timing.detect_ms},
                             {"iterations", result.fit.iterations}});
    }

    std::vector<double> iters_d(iterations.begin(), iterations.end());
    std::vector<double> fit_detect;
    for (std::size_t i = 0; i < fit_ms.size(); ++i) fit_detect.push_back(fit_ms[i] + det[i]);
    const nlohmann::json summary{{"frames", frames.size()},
                                 {"failed", failures},
                                 {"median_preprocess_ms", median(pre)},
                                 {"median_fit_ms", median(fit_ms)},
                                 {"median_detect_ms", median(det)},
                                 {"median_fit_detect_ms", median(fit_detect)},
                                 {"median_total_ms", median(total)},
                                 {"median_iterations", median(iters_d)},
                                 {"per_frame", per_frame}};
    write_json_file(out_dir / "timing.json", summary);

    std::printf("frames %zu  failed %d\n", frames.size(), failures);
    std::printf("%-12s %10s\n", "stage", "median ms");
    std::printf("%-12s %10.3f\n", "preprocess", median(pre));
    std::printf("%-12s %10.3f\n", "fit", median(fit_ms));
    std::printf("%-12s %10.3f\n", "detect", median(det));
    std::printf("%-12s %10.3f\n", "total", median(total));
    std::printf("median EM iterations %.1f\n", median(iters_d));
    return failures ? kExitFailure : kExitOk;
}

int cmd_learn_priors(const fs::path& train_dir, fs::path labels_dir, const fs::path& out, const DetectorFlags& flags)
{
    if (labels_dir.empty()) labels_dir = train_dir;
    const auto images = list_frames(train_dir);
    if (images.empty()) throw IoError("no training images in " + train_dir.string());
    std::vector<TrainingExample> examples;
    for (const auto& img : images) {
        const fs::path label_path = labels_dir / (img.stem().string() + "_labels.pgm");
        if (!fs::exists(label_path)) throw IoError("missing label mask " + label_path.string());
        examples.push_back({load_image(img), load_image(label_path)});
    }
    PriorLearnOptions opts;
    opts.working_size = flags.working_size;
    opts.colorspace = parse_colorspace(flags.colorspace);
    opts.features = feature_mode_for(parse_mode(flags.mode));
    const WeakPriors priors = learn_weak_priors(examples, opts);
    save_priors(out, priors);
    static constexpr const char* names[] = {"water", "middle", "top"};
    std::cout << "learned from " << examples.size() << " images\n";
    for (int k = 0; k < kGaussians; ++k) {
        std::cout << names[k] << " mean:";
        for (Eigen::Index j = 0; j < priors.components[k].mean.size(); ++j)
            std::printf(" %.4f", priors.components[k].mean(j));
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_evaluate(const fs::path& results_dir, const fs::path& ann_dir, const fs::path& out, int min_size,
                 const std::string& glitter, int nbuf)
{
    if (!fs::is_directory(results_dir)) throw IoError("not a directory: " + results_dir.string());
    if (!fs::is_directory(ann_dir)) throw IoError("not a directory: " + ann_dir.string());
    EvalOptions opts;
    opts.min_size = min_size;
    opts.glitter = parse_glitter_mode(glitter);
    if (min_size < 0) throw InvalidArgument("--min-size must be non-negative");
    if (nbuf < 0) throw InvalidArgument("--nbuf must be positive");

    std::set<std::string> result_stems, ann_stems;
    const std::string mask_suffix = "_mask.pgm";
    for (const auto& e : fs::directory_iterator(results_dir)) {
        const std::string name = e.path().filename().string();
        if (name.size() > mask_suffix.size() && name.ends_with(mask_suffix))
            result_stems.insert(name.substr(0, name.size() - mask_suffix.size()));
    }
    for (const auto& e : fs::directory_iterator(ann_dir))
        if (e.path().extension() == ".json") ann_stems.insert(e.path().stem().string());
    if (result_stems.empty()) throw IoError("no results in " + results_dir.string());
    if (result_stems != ann_stems) {
        throw IoError("results (" + std::to_string(result_stems.size()) + " frames) and annotations (" +
                      std::to_string(ann_stems.size()) + " frames) do not pair up");
    }

    std::vector<MatchOutcome> outcomes;
    std::vector<double> rmses;
    for (const auto& stem : result_stems) {
        const ImageU8 mask = load_image(results_dir / (stem + mask_suffix));
        const auto edge = load_edge(results_dir / (stem + "_edge.txt"));
        const auto boxes = load_boxes(results_dir / (stem + "_boxes.json"));
        const FrameAnnotation ann = load_annotation(ann_dir / (stem + ".json"));
        if (static_cast<int>(edge.size()) != mask.width) throw IoError(stem + ": edge length differs from mask width");
        const FrameEvaluation ev = evaluate_frame(boxes, edge, ann, mask.width, mask.height, opts);
        outcomes.push_back(ev.outcome);
        rmses.push_back(ev.edge_rmse);
    }
    const Metrics m = aggregate(outcomes, rmses);
    nlohmann::json report = metrics_to_json(m);
    std::optional<std::pair<int, double>> success;
    if (nbuf > 0) {
        success = std::make_pair(nbuf, p_success(m.rec, nbuf));
        report["nbuf"] = nbuf;
        report["p_success"] = success->second;
    }
    report["min_size"] = min_size;
    report["glitter"] = glitter;
    write_json_file(out.empty() ? results_dir / "metrics.json" : out, report);
    std::cout << format_metrics_table(m, success);
    return kExitOk;
}

int cmd_synth(const fs::path& spec_path, int random_count, std::optional<std::uint64_t> seed, const fs::path& out_dir)
{
    std::vector<std::pair<std::string, SyntheticFrame>> frames;
    if (random_count > 0) {
        SuiteOptions opt;
        const std::uint64_t base = seed.value_or(1);
        for (int n = 0; n < random_count; ++n) {
            auto seq = generate_sequence(random_scene(base + static_cast<std::uint64_t>(n), opt));
            char stem[32];
            std::snprintf(stem, sizeof stem, "scene_%04d", n);
            frames.emplace_back(stem, std::move(seq.front()));
        }
    } else {
        if (spec_path.empty()) throw InvalidArgument("synth needs a scene spec file or --random N");
        SceneSpec spec = scene_from_json(read_json_file(spec_path));
        if (seed) spec.seed = *seed;
        auto seq = generate_sequence(spec);
        for (std::size_t t = 0; t < seq.size(); ++t) {
            char stem[32];
            std::snprintf(stem, sizeof stem, "frame_%04zu", t);
            frames.emplace_back(stem, std::move(seq[t]));
        }
    }
    fs::create_directories(out_dir / "frames");
    fs::create_directories(out_dir / "annotations");
    fs::create_directories(out_dir / "labels");
    for (const auto& [stem, f] : frames) {
        save_image(out_dir / "frames" / (stem + ".ppm"), f.image);
        save_annotation(out_dir / "annotations" / (stem + ".json"), f.annotation);
        save_image(out_dir / "labels" / (stem + "_labels.pgm"), f.labels);
    }
    std::cout << "wrote " << frames.size() << " frames to " << out_dir.string() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Water segmentation and obstacle detection for marine imagery"};
    app.require_subcommand(1);

    DetectorFlags seg_flags, run_flags, learn_flags;
    std::string frame_path, priors_path, out_path, seq_dir, train_dir, labels_dir, results_dir, ann_dir, spec_path;
    bool overlay = false;
    int reset_every = 0, min_size = 0, nbuf = 0, random_count = 0;
    std::string glitter = "account";
    std::optional<std::uint64_t> seed;

    auto* segment = app.add_subcommand("segment", "Segment a single frame");
    segment->add_option("frame", frame_path, "Input PPM/PGM frame")->required();
    segment->add_option("--priors", priors_path, "Weak priors JSON")->required();
    segment->add_option("--out", out_path, "Output directory")->required();
    segment->add_flag("--overlay", overlay, "Also write an overlay image");
    seg_flags.add_to(*segment);

    auto* run = app.add_subcommand("run", "Process a sequence of frames with temporal warm starts");
    run->add_option("sequence", seq_dir, "Directory of frames, processed in file-name order")->required();
    run->add_option("--priors", priors_path, "Weak priors JSON")->required();
    run->add_option("--out", out_path, "Output directory")->required();
    run->add_option("--reset-every", reset_every, "Drop the temporal model every N frames (0 never)");
    run_flags.add_to(*run);

    auto* learn = app.add_subcommand("learn-priors", "Fit weak priors to labelled training images");
    learn->add_option("images", train_dir, "Directory of training images")->required();
    learn->add_option("--labels", labels_dir, "Directory of <name>_labels.pgm masks (default: images directory)");
    learn->add_option("--out", out_path, "Output priors JSON")->required();
    learn_flags.add_to(*learn);

    auto* evaluate = app.add_subcommand("evaluate", "Score detections against annotations");
    evaluate->add_option("results", results_dir, "Directory written by segment or run")->required();
    evaluate->add_option("annotations", ann_dir, "Directory of <frame>.json annotations")->required();
    evaluate->add_option("--out", out_path, "Metrics JSON (default: <results>/metrics.json)");
    evaluate->add_option("--min-size", min_size, "Ignore objects whose shorter side is below this many pixels");
    evaluate->add_option("--glitter", glitter, "ignore or account");
    evaluate->add_option("--nbuf", nbuf, "Report the detection probability over this many frames");

    auto* synth = app.add_subcommand("synth", "Render a synthetic sequence with ground truth");
    synth->add_option("spec", spec_path, "Scene spec JSON");
    synth->add_option("--random", random_count, "Render N random single-frame scenes instead of a spec");
    synth->add_option("--seed", seed, "Override the scene seed");
    synth->add_option("--out", out_path, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*segment) return cmd_segment(frame_path, priors_path, out_path, overlay, seg_flags);
        if (*run) return cmd_run(seq_dir, priors_path, out_path, reset_every, run_flags);
        if (*learn) return cmd_learn_priors(train_dir, labels_dir, out_path, learn_flags);
        if (*evaluate) return cmd_evaluate(results_dir, ann_dir, out_path, min_size, glitter, nbuf);
        if (*synth) return cmd_synth(spec_path, random_count, seed, out_path);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
