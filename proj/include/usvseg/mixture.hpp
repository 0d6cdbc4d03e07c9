#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "usvseg/error.hpp"
#include "usvseg/imaging/features.hpp"
#include "usvseg/imaging/image.hpp"

namespace usvseg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Three Gaussians plus one uniform outlier component.
inline constexpr int kGaussians = 3;
inline constexpr int kComponents = 4;
/// Component index 0 is water, 1 the middle band, 2 the top band, 3 the uniform outlier.
inline constexpr int kWater = 0;
inline constexpr int kUniform = 3;

inline constexpr double kDefaultRegularization = 1e-5;

struct GaussianComponent {
    Vector mean;
    Matrix cov;

    [[nodiscard]] int dim() const { return static_cast<int>(mean.size()); }
};

struct MixtureParams {
    std::array<GaussianComponent, kGaussians> components;
    double uniform_density = 1.0;

    [[nodiscard]] int dim() const { return components[0].dim(); }
};

/// Density of the uniform component for a w x h working image. Over pixel
/// coordinates it is 1/(w*h); the spatial features are scaled to [0, 1], which
/// multiplies the density by (w-1)(h-1). Colour-only features span the unit
/// cube, density 1.
inline double uniform_density_for(int w, int h, FeatureMode mode = FeatureMode::Full)
{
    if (mode == FeatureMode::ColorOnly) return 1.0;
    const double wd = w, hd = h;
    return (std::max(wd - 1.0, 1.0) * std::max(hd - 1.0, 1.0)) / (wd * hd);
}

/// Gaussian priors over the three component means.
struct WeakPriors {
    std::array<GaussianComponent, kGaussians> components;

    [[nodiscard]] int dim() const { return components[0].dim(); }

    /// Marginal over a subset of feature dimensions.
    [[nodiscard]] WeakPriors select(std::span<const int> dims) const
    {
        WeakPriors out;
        const auto n = static_cast<Eigen::Index>(dims.size());
        for (int k = 0; k < kGaussians; ++k) {
            const auto& src = components[k];
            auto& dst = out.components[k];
            dst.mean.resize(n);
            dst.cov.resize(n, n);
            for (Eigen::Index a = 0; a < n; ++a) {
                dst.mean(a) = src.mean(dims[a]);
                for (Eigen::Index b = 0; b < n; ++b) {
                    dst.cov(a, b) = src.cov(dims[a], dims[b]);
                }
            }
        }
        return out;
    }

    /// Adapts full (x, y, c1, c2, c3) priors to colour-only features.
    [[nodiscard]] WeakPriors for_dim(int d) const
    {
        if (d == dim()) {
            return *this;
        }
        if (dim() == 5 && d == 3) {
            static constexpr std::array<int, 3> color_dims{2, 3, 4};
            return select(color_dims);
        }
        throw InvalidArgument("priors of dimension " + std::to_string(dim()) + " cannot serve features of dimension " +
                              std::to_string(d));
    }
};

/// Per-pixel distributions over the four components, stored as four planes.
struct CategoricalField {
    int width = 0;
    int height = 0;
    std::array<Plane, kComponents> planes;

    CategoricalField() = default;
    CategoricalField(int w, int h, double fill = 0.0) : width(w), height(h)
    {
        for (auto& p : planes) p = Plane(w, h, 1, fill);
    }

    /// Every pixel set to the same distribution.
    static CategoricalField constant(int w, int h, const std::array<double, kComponents>& probs)
    {
        CategoricalField f(w, h);
        for (int k = 0; k < kComponents; ++k) {
            std::fill(f.planes[k].data.begin(), f.planes[k].data.end(), probs[k]);
        }
        return f;
    }

    [[nodiscard]] int size() const { return width * height; }

    double& operator()(int k, int i) { return planes[k].data[i]; }
    [[nodiscard]] double operator()(int k, int i) const { return planes[k].data[i]; }

    [[nodiscard]] double row_sum(int i) const
    {
        double s = 0.0;
        for (int k = 0; k < kComponents; ++k) s += planes[k].data[i];
        return s;
    }

    [[nodiscard]] CategoricalField scaled(double factor) const
    {
        CategoricalField out = *this;
        for (auto& p : out.planes)
            for (double& v : p.data) v *= factor;
        return out;
    }

    friend bool operator==(const CategoricalField&, const CategoricalField&) = default;
};

/// Gaussians fitted to the initialisation regions, with region pixel fractions.
/// The weights are diagnostic only; the soft reset does not use them.
struct ObservedInit {
    std::array<GaussianComponent, kGaussians> components;
    std::array<double, kGaussians> weights{};
};

inline Matrix regularize_covariance(const Matrix& cov, double eps)
{
    return cov + eps * Matrix::Identity(cov.rows(), cov.cols());
}

/// Maximum-likelihood mean and (1/N) covariance of the columns of `samples`, regularised.
inline GaussianComponent fit_gaussian(const Matrix& samples, double eps)
{
    if (samples.cols() == 0) {
        throw InvalidArgument("cannot fit a Gaussian to zero samples");
    }
    GaussianComponent g;
    g.mean = samples.rowwise().mean();
    const Matrix centered = samples.colwise() - g.mean;
    g.cov = regularize_covariance(centered * centered.transpose() / static_cast<double>(samples.cols()), eps);
    return g;
}

namespace detail {

inline Eigen::LLT<Matrix> checked_cholesky(const Matrix& cov)
{
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("covariance is not positive definite");
    }
    return llt;
}

inline double log_det_from_cholesky(const Eigen::LLT<Matrix>& llt)
{
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

} // namespace detail

inline double gaussian_logpdf(const Vector& y, const GaussianComponent& g)
{
    const auto llt = detail::checked_cholesky(g.cov);
    const Vector z = llt.matrixL().solve(y - g.mean);
    const double d = static_cast<double>(y.size());
    return -0.5 * (d * std::log(2.0 * std::numbers::pi) + detail::log_det_from_cholesky(llt) + z.squaredNorm());
}

/// Log-density of every column of `points`.
inline Vector gaussian_logpdf_all(const Matrix& points, const GaussianComponent& g)
{
    const auto llt = detail::checked_cholesky(g.cov);
    const Matrix z = llt.matrixL().solve(points.colwise() - g.mean);
    const double d = static_cast<double>(points.rows());
    const double constant = d * std::log(2.0 * std::numbers::pi) + detail::log_det_from_cholesky(llt);
    return (-0.5 * (z.colwise().squaredNorm().array() + constant)).matrix().transpose();
}

/// Per-pixel log-likelihood of each of the four components, one row per pixel.
inline Eigen::MatrixX4d component_log_likelihoods(const FeatureField& features, const MixtureParams& params)
{
    Eigen::MatrixX4d out(features.size(), kComponents);
    for (int k = 0; k < kGaussians; ++k) {
        out.col(k) = gaussian_logpdf_all(features.values, params.components[k]);
    }
    out.col(kUniform).setConstant(std::log(params.uniform_density));
    return out;
}

/// Bayes posteriors p_ik proportional to likelihood_k(y_i) * prior_ik, evaluated in log space.
inline CategoricalField pixel_posteriors(const FeatureField& features, const MixtureParams& params,
                                         const CategoricalField& prior)
{
    if (prior.size() != features.size()) {
        throw InvalidArgument("prior field and features differ in size");
    }
    const Eigen::MatrixX4d loglik = component_log_likelihoods(features, params);
    CategoricalField post(prior.width, prior.height);
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < features.size(); ++i) {
        std::array<double, kComponents> terms{};
        double best = neg_inf;
        for (int k = 0; k < kComponents; ++k) {
            const double p = prior(k, i);
            terms[k] = p > 0.0 ? loglik(i, k) + std::log(p) : neg_inf;
            best = std::max(best, terms[k]);
        }
        if (!std::isfinite(best)) {
            throw NumericalError("all posterior terms vanish at pixel " + std::to_string(i));
        }
        double total = 0.0;
        for (double& t : terms) {
            t = std::exp(t - best);
            total += t;
        }
        for (int k = 0; k < kComponents; ++k) {
            post(k, i) = terms[k] / total;
        }
    }
    return post;
}

/// Collapses the two-component mixture alpha*prev + (1-alpha)*obs into one
/// Gaussian with the same first two moments.
inline GaussianComponent merge_moment_match(const GaussianComponent& prev, const GaussianComponent& obs, double alpha)
{
    if (prev.dim() != obs.dim()) {
        throw InvalidArgument("cannot merge Gaussians of different dimension");
    }
    if (alpha < 0.0 || alpha > 1.0) {
        throw InvalidArgument("merge weight must lie in [0,1]");
    }
    if (alpha == 1.0) return prev;
    if (alpha == 0.0) return obs;
    GaussianComponent out;
    out.mean = alpha * prev.mean + (1.0 - alpha) * obs.mean;
    const Matrix second = alpha * (prev.cov + prev.mean * prev.mean.transpose()) +
                          (1.0 - alpha) * (obs.cov + obs.mean * obs.mean.transpose());
    out.cov = second - out.mean * out.mean.transpose();
    out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
    return out;
}

} // namespace usvseg
