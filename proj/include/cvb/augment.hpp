#pragma once

#include <span>
#include <vector>

namespace cvb {

// One candidate approximation structure. kl_or_neg_elbo is the divergence
// to the target (lower is better); in Bayesian use a negative ELBO works
// identically because the shared log-evidence constant cancels in the
// weights.
struct CandidateScore {
    double kl_or_neg_elbo = 0.0;  // may be +infinity
    double prior_weight = 0.0;    // nonnegative; priors sum to 1
};

struct MixtureWeights {
    std::vector<double> w;  // nonnegative, sums to 1
};

// w_i proportional to prior_i * exp(-KL_i), in log domain. Candidates
// with infinite KL get weight exactly zero; throws if no finite score
// exists.
MixtureWeights optimal_weights(std::span<const CandidateScore> scores);

// sum_i w_i KL_i + sum_i w_i log(w_i / prior_i); at the optimal weights
// this equals -log sum_i prior_i exp(-KL_i).
double kl_upper_bound(std::span<const CandidateScore> scores, const MixtureWeights& weights);

// Componentwise sum_i w_i * moment_i.
std::vector<double> mixture_moments(const std::vector<std::vector<double>>& component_moments,
                                    const MixtureWeights& weights);

}  // namespace cvb
