#pragma once

#include <vector>

#include "usvseg/usvseg.hpp"

namespace fixture {

/// Weak priors learned from 20 random synthetic training frames, as the
/// detector would be trained in practice.
inline const usvseg::WeakPriors& synthetic_priors()
{
    static const usvseg::WeakPriors priors = [] {
        const auto frames = usvseg::random_training_frames(100000, 20, usvseg::SuiteOptions{});
        std::vector<usvseg::TrainingExample> examples;
        for (const auto& f : frames) examples.push_back({f.image, f.labels});
        return usvseg::learn_weak_priors(examples, {});
    }();
    return priors;
}

/// First-frame inputs for fit() on a working-resolution frame.
struct FitInputs {
    usvseg::FeatureField features;
    usvseg::MixtureParams params;
    usvseg::CategoricalField prior;
    usvseg::MrfKernels kernels;
};

inline FitInputs first_frame_inputs(const usvseg::ImageU8& frame, const usvseg::DetectorConfig& cfg = {})
{
    using namespace usvseg;
    FitInputs in;
    const int ws = cfg.working_size;
    in.features = working_features(frame, ws, ws, cfg.colorspace, feature_mode_for(cfg.mode));
    const FirstFrameInit first = init_first_frame(in.features, cfg.uniform_prior, cfg.em.regularization);
    for (int k = 0; k < kGaussians; ++k) in.params.components[k] = first.observed.components[k];
    in.params.uniform_density = uniform_density_for(ws, ws, feature_mode_for(cfg.mode));
    in.prior = first.prior;
    in.kernels = make_mrf_kernels(ws);
    return in;
}

} // namespace fixture
