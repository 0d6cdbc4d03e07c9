// Learns weak priors from random synthetic frames, then runs the detector
// over a scene spec and scores it.
//
//   learn_and_segment [scene.json]

#include <cstdio>
#include <exception>
#include <vector>

#include "usvseg/usvseg.hpp"

using namespace usvseg;

int main(int argc, char** argv)
{
    try {
        std::vector<TrainingExample> training;
        for (const auto& f : random_training_frames(2024, 20, SuiteOptions{})) training.push_back({f.image, f.labels});
        const WeakPriors priors = learn_weak_priors(training, {});

        SceneSpec spec;
        if (argc > 1) {
            spec = scene_from_json(read_json_file(argv[1]));
        } else {
            SuiteOptions opt;
            opt.frames = 10;
            spec = random_scene(7, opt);
        }
        const auto frames = generate_sequence(spec);

        DetectorState state = DetectorState::create(priors, DetectorConfig{});
        std::vector<MatchOutcome> outcomes;
        std::vector<double> rmses;
        for (std::size_t t = 0; t < frames.size(); ++t) {
            auto [result, next] = process_frame(state, frames[t].image);
            state = std::move(next);
            const auto ev = evaluate_frame(result.obstacles, result.edge, frames[t].annotation, spec.width, spec.height, {});
            outcomes.push_back(ev.outcome);
            rmses.push_back(ev.edge_rmse);
            std::printf("frame %2zu  iters %d  obstacles %zu  edge rmse %.2f px  fit %.2f ms\n", t, result.fit.iterations,
                        result.obstacles.size(), ev.edge_rmse, result.timing.fit_ms);
        }
        std::printf("\n%s", format_metrics_table(aggregate(outcomes, rmses)).c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
