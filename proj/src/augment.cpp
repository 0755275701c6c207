#include "cvb/augment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cvb/mathutil.hpp"

namespace cvb {

MixtureWeights optimal_weights(std::span<const CandidateScore> scores) {
    if (scores.empty()) throw std::invalid_argument("optimal_weights: no candidates");
    std::vector<double> logw(scores.size());
    bool any_finite = false;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const CandidateScore& s = scores[i];
        if (s.prior_weight < 0.0)
            throw std::invalid_argument("optimal_weights: negative prior weight");
        if (std::isfinite(s.kl_or_neg_elbo) && s.prior_weight > 0.0) {
            logw[i] = std::log(s.prior_weight) - s.kl_or_neg_elbo;
            any_finite = true;
        } else {
            logw[i] = -std::numeric_limits<double>::infinity();
        }
    }
    if (!any_finite)
        throw std::invalid_argument("optimal_weights: all candidate scores are infinite");
    softmax_inplace(logw);
    return MixtureWeights{std::move(logw)};
}

double kl_upper_bound(std::span<const CandidateScore> scores, const MixtureWeights& weights) {
    if (scores.size() != weights.w.size())
        throw std::invalid_argument("kl_upper_bound: size mismatch");
    double bound = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double w = weights.w[i];
        if (w <= 0.0) continue;  // limit w log w -> 0
        bound += w * scores[i].kl_or_neg_elbo + w * std::log(w / scores[i].prior_weight);
    }
    return bound;
}

std::vector<double> mixture_moments(const std::vector<std::vector<double>>& component_moments,
                                    const MixtureWeights& weights) {
    if (component_moments.size() != weights.w.size())
        throw std::invalid_argument("mixture_moments: size mismatch");
    if (component_moments.empty()) return {};
    std::vector<double> out(component_moments.front().size(), 0.0);
    for (std::size_t i = 0; i < component_moments.size(); ++i) {
        if (component_moments[i].size() != out.size())
            throw std::invalid_argument("mixture_moments: inconsistent dimensions");
        for (std::size_t d = 0; d < out.size(); ++d)
            out[d] += weights.w[i] * component_moments[i][d];
    }
    return out;
}

}  // namespace cvb
