#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "usvseg/error.hpp"
#include "usvseg/imaging.hpp"
#include "usvseg/mixture.hpp"

namespace usvseg {

/// A training frame with its semantic label image: 1 = water (bottom),
/// 2 = middle band, 3 = top band, 0 = unlabelled.
struct TrainingExample {
    ImageU8 image;
    ImageU8 labels;
};

struct PriorLearnOptions {
    int working_size = 50;
    Colorspace colorspace = Colorspace::YCrCb;
    FeatureMode features = FeatureMode::Full;
    double regularization = kDefaultRegularization;
};

/// Pools the working-resolution features of every pixel labelled k over all
/// examples and fits one Gaussian per component.
inline WeakPriors learn_weak_priors(std::span<const TrainingExample> examples, const PriorLearnOptions& options)
{
    if (examples.empty()) {
        throw InvalidArgument("no training examples");
    }
    const int ws = options.working_size;
    std::array<std::vector<Eigen::Index>, kGaussians> members;
    std::vector<FeatureField> fields;
    fields.reserve(examples.size());
    for (std::size_t e = 0; e < examples.size(); ++e) {
        const auto& ex = examples[e];
        if (ex.labels.channels != 1) {
            throw InvalidArgument("label image " + std::to_string(e) + " must be single-channel");
        }
        if (ex.labels.width != ex.image.width || ex.labels.height != ex.image.height) {
            throw InvalidArgument("label image " + std::to_string(e) + " does not match its frame size");
        }
        fields.push_back(working_features(ex.image, ws, ws, options.colorspace, options.features));
        const ImageU8 small = resize(ex.labels, ws, ws, Interp::Nearest);
        for (std::size_t i = 0; i < small.data.size(); ++i) {
            const int label = small.data[i];
            if (label >= 1 && label <= kGaussians) {
                members[label - 1].push_back(static_cast<Eigen::Index>(e * small.data.size() + i));
            }
        }
    }
    const int d = fields.front().dim();
    const auto per_image = static_cast<Eigen::Index>(ws) * ws;
    WeakPriors priors;
    for (int k = 0; k < kGaussians; ++k) {
        const auto& idx = members[k];
        if (static_cast<int>(idx.size()) < d + 1) {
            throw InvalidArgument("component " + std::to_string(k + 1) + " has " + std::to_string(idx.size()) +
                                  " labelled pixels, need at least " + std::to_string(d + 1));
        }
        Matrix samples(d, static_cast<Eigen::Index>(idx.size()));
        for (Eigen::Index j = 0; j < samples.cols(); ++j) {
            const Eigen::Index flat = idx[j];
            samples.col(j) = fields[flat / per_image].values.col(flat % per_image);
        }
        priors.components[k] = fit_gaussian(samples, options.regularization);
    }
    return priors;
}

} // namespace usvseg
