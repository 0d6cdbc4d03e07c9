#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "usvseg/error.hpp"
#include "usvseg/imaging/convolve.hpp"
#include "usvseg/imaging/features.hpp"
#include "usvseg/mixture.hpp"

namespace usvseg {

struct EmConfig {
    int max_iters = 10;
    /// Convergence threshold on the mean absolute change of the posterior field.
    double tol = 1e-2;
    /// false selects the plain mixture without MRF coupling.
    bool use_mrf = true;
    double regularization = kDefaultRegularization;

    void validate() const
    {
        if (max_iters < 1) throw InvalidArgument("max_iters must be at least 1");
        if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
        if (!(regularization >= 0.0)) throw InvalidArgument("regularization must be non-negative");
    }
};

/// Probabilities below this are raised to it between EM steps so that the
/// neighbourhood products of the E-step never vanish.
inline constexpr double kProbabilityFloor = 1e-12;
/// A component whose responsibility mass falls below this keeps its parameters.
inline constexpr double kEmptyComponentMass = 1e-6;

struct EStepResult {
    CategoricalField s_hat; ///< smoothed prior auxiliaries, rows sum to 2
    CategoricalField q_hat; ///< smoothed posteriors, rows sum to 2
    CategoricalField prior; ///< updated priors, rows sum to 1
};

namespace detail {

/// normalise(f o (f * lambda)) * lambda1 for all four planes.
inline CategoricalField smoothed_neighbour_product(const CategoricalField& field, const MrfKernels& kernels)
{
    CategoricalField product(field.width, field.height);
    for (int k = 0; k < kComponents; ++k) {
        const Plane neighbours = convolve_field(field.planes[k], kernels.lambda);
        for (int i = 0; i < field.size(); ++i) {
            product(k, i) = field(k, i) * neighbours.data[i];
        }
    }
    for (int i = 0; i < field.size(); ++i) {
        const double norm = product.row_sum(i);
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw NumericalError("E-step normaliser vanished at pixel " + std::to_string(i));
        }
        for (int k = 0; k < kComponents; ++k) {
            product(k, i) /= norm;
        }
    }
    CategoricalField hat(field.width, field.height);
    for (int k = 0; k < kComponents; ++k) {
        hat.planes[k] = convolve_field(product.planes[k], kernels.lambda1);
    }
    return hat;
}

/// Raises every entry to at least `floor` and renormalises each pixel.
inline void floor_probabilities(CategoricalField& field, double floor)
{
    for (int i = 0; i < field.size(); ++i) {
        bool touched = false;
        for (int k = 0; k < kComponents; ++k) {
            if (field(k, i) < floor) {
                field(k, i) = floor;
                touched = true;
            }
        }
        if (touched) {
            const double s = field.row_sum(i);
            for (int k = 0; k < kComponents; ++k) field(k, i) /= s;
        }
    }
}

inline void check_same_shape(const CategoricalField& a, const CategoricalField& b, const char* what)
{
    if (a.width != b.width || a.height != b.height) {
        throw InvalidArgument(std::string(what) + ": field sizes differ");
    }
}

} // namespace detail

/// Convolutional E-step: s_k = xi o pi_k o (pi_k * lambda), s_hat_k = s_k * lambda1,
/// likewise q_hat from the posteriors, and the new prior (s_hat + q_hat) / 4.
inline EStepResult e_step(const CategoricalField& prior, const CategoricalField& posterior, const MrfKernels& kernels)
{
    detail::check_same_shape(prior, posterior, "e_step");
    EStepResult out;
    out.s_hat = detail::smoothed_neighbour_product(prior, kernels);
    out.q_hat = detail::smoothed_neighbour_product(posterior, kernels);
    out.prior = CategoricalField(prior.width, prior.height);
    for (int k = 0; k < kComponents; ++k) {
        for (int i = 0; i < prior.size(); ++i) {
            out.prior(k, i) = 0.25 * (out.s_hat(k, i) + out.q_hat(k, i));
        }
    }
    return out;
}

struct MStepResult {
    MixtureParams params;
    /// Components whose responsibility mass was too small to re-estimate.
    std::array<bool, kGaussians> frozen{};
};

/// Total weight that multiplies the log prior over the means in the lower bound.
inline double prior_weight(const CategoricalField& q_hat)
{
    double total = 0.0;
    for (const auto& p : q_hat.planes)
        for (double v : p.data) total += v;
    return 0.5 * total;
}

/// MAP update of the Gaussian parameters. The mean solves the stationary
/// condition of the lower bound with the previous covariance held fixed:
///   (beta/2 S^-1 + W Sp^-1) mu = 1/2 S^-1 sum_i q_ik y_i + W Sp^-1 mu_p
/// where W is the prior weight. The covariance is the weighted scatter about
/// the new mean, then regularised. The uniform component is untouched.
inline MStepResult m_step(const FeatureField& features, const CategoricalField& q_hat, const WeakPriors& priors,
                          const MixtureParams& previous, double regularization)
{
    if (q_hat.size() != features.size()) {
        throw InvalidArgument("m_step: responsibilities and features differ in size");
    }
    if (priors.dim() != features.dim() || previous.dim() != features.dim()) {
        throw InvalidArgument("m_step: dimension mismatch between features, priors and parameters");
    }
    const int d = features.dim();
    const Matrix identity = Matrix::Identity(d, d);
    const double weight = prior_weight(q_hat);

    MStepResult out;
    out.params = previous;
    for (int k = 0; k < kGaussians; ++k) {
        const Eigen::Map<const Vector> resp(q_hat.planes[k].data.data(), q_hat.size());
        const double beta = resp.sum();
        if (!(beta >= kEmptyComponentMass)) {
            out.frozen[k] = true;
            continue;
        }
        const auto& prior = priors.components[k];
        const Matrix data_precision = detail::checked_cholesky(previous.components[k].cov).solve(identity);
        const Matrix prior_precision = detail::checked_cholesky(prior.cov).solve(identity);
        const Vector weighted_sum = features.values * resp;

        const Matrix system = 0.5 * beta * data_precision + weight * prior_precision;
        const Vector rhs = 0.5 * data_precision * weighted_sum + weight * prior_precision * prior.mean;
        GaussianComponent& g = out.params.components[k];
        g.mean = system.llt().solve(rhs);

        const Matrix centered = features.values.colwise() - g.mean;
        Matrix scatter = centered * resp.asDiagonal() * centered.transpose() / beta;
        scatter = (0.5 * (scatter + scatter.transpose())).eval();
        g.cov = regularize_covariance(scatter, regularization);
    }
    return out;
}

/// Lower bound on the cost:
///   sum_i [ 1/2 q_hat_i^T (log l_i + log p(Theta|priors)) + 1/2 (s_hat_i + q_hat_i)^T log pi_i ]
/// with l_ik the component likelihoods and log pi floored at log(1e-12).
inline double lower_bound(const FeatureField& features, const MixtureParams& params, const CategoricalField& prior,
                          const CategoricalField& q_hat, const CategoricalField& s_hat, const WeakPriors& priors)
{
    detail::check_same_shape(prior, q_hat, "lower_bound");
    detail::check_same_shape(prior, s_hat, "lower_bound");
    double log_mean_prior = 0.0;
    for (int k = 0; k < kGaussians; ++k) {
        log_mean_prior += gaussian_logpdf(params.components[k].mean, priors.components[k]);
    }
    const Eigen::MatrixX4d loglik = component_log_likelihoods(features, params);
    const double log_floor = std::log(kProbabilityFloor);
    double total = 0.0;
    for (int i = 0; i < features.size(); ++i) {
        for (int k = 0; k < kComponents; ++k) {
            const double q = q_hat(k, i);
            const double log_pi = std::max(std::log(prior(k, i)), log_floor);
            total += 0.5 * q * (loglik(i, k) + log_mean_prior) + 0.5 * (s_hat(k, i) + q) * log_pi;
        }
    }
    return total;
}

struct FitResult {
    MixtureParams params;
    CategoricalField prior;
    CategoricalField q_hat; ///< unnormalised, rows sum to 2
    CategoricalField s_hat;
    CategoricalField posterior;
    int iterations = 0;
    bool converged = false;
    std::array<bool, kGaussians> frozen{};
    std::vector<double> bound_trace;  ///< lower bound after each iteration (diagnostic)
    std::vector<double> change_trace; ///< mean absolute posterior change per iteration
};

/// What the optional observer sees after each EM cycle.
struct IterationView {
    int iteration;
    const CategoricalField& posterior;
    const EStepResult& estep;
    const MixtureParams& params;
};

using IterationObserver = std::function<void(const IterationView&)>;

/// The EM loop: posteriors, E-step, M-step, until the posterior field moves
/// less than `tol` on average or `max_iters` is reached. Without the MRF the
/// E-step is replaced by q_hat = 2P and pi = P.
inline FitResult fit(const FeatureField& features, const MixtureParams& init_params, const CategoricalField& init_prior,
                     const WeakPriors& priors, const MrfKernels& kernels, const EmConfig& cfg,
                     const IterationObserver& observer = {})
{
    cfg.validate();
    if (init_prior.size() != features.size()) {
        throw InvalidArgument("fit: prior field and features differ in size");
    }
    FitResult result;
    MixtureParams params = init_params;
    CategoricalField prior = init_prior;
    detail::floor_probabilities(prior, kProbabilityFloor);

    const double entries = static_cast<double>(features.size()) * kComponents;
    CategoricalField last_posterior;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        CategoricalField posterior = pixel_posteriors(features, params, prior);
        detail::floor_probabilities(posterior, kProbabilityFloor);

        EStepResult estep;
        if (cfg.use_mrf) {
            estep = e_step(prior, posterior, kernels);
        } else {
            estep.q_hat = posterior.scaled(2.0);
            estep.s_hat = estep.q_hat;
            estep.prior = posterior;
        }

        const MStepResult mstep = m_step(features, estep.q_hat, priors, params, cfg.regularization);
        params = mstep.params;
        for (int k = 0; k < kGaussians; ++k) result.frozen[k] = result.frozen[k] || mstep.frozen[k];

        prior = estep.prior;
        detail::floor_probabilities(prior, kProbabilityFloor);
        result.bound_trace.push_back(lower_bound(features, params, prior, estep.q_hat, estep.s_hat, priors));

        double change = std::numeric_limits<double>::infinity();
        if (it > 1) {
            double acc = 0.0;
            for (int k = 0; k < kComponents; ++k)
                for (int i = 0; i < features.size(); ++i) acc += std::abs(posterior(k, i) - last_posterior(k, i));
            change = acc / entries;
        }
        result.change_trace.push_back(change);
        result.iterations = it;

        if (observer) {
            observer(IterationView{it, posterior, estep, params});
        }
        result.q_hat = std::move(estep.q_hat);
        result.s_hat = std::move(estep.s_hat);
        last_posterior = std::move(posterior);
        if (change < cfg.tol) {
            result.converged = true;
            break;
        }
    }
    result.params = std::move(params);
    result.prior = std::move(prior);
    result.posterior = std::move(last_posterior);
    return result;
}

} // namespace usvseg
