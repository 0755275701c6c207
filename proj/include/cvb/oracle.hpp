#pragma once

#include "cvb/gmm.hpp"

namespace cvb {

// Exact inference on a tiny clustering instance by enumerating all K^N
// label matrices. Uses the same dropped -log(zeta*K^N) constant as the
// algorithm ELBOs; a labeling's empty cluster contributes the unit-scale
// factor's entropy credit 2*pi*e, matching the capped-scale factor
// family on the algorithm side.
struct ExactPosterior {
    double log_evidence = 0.0;          // lse over labelings of sum_k log gamma_k
    SoftLabelMatrix label_marginals;    // P(l_i = k | X)
    // P(l_i = k | X, l_0 = e_0): the label-switching symmetry of the
    // exchangeable mixture makes the plain marginals uniform, so point
    // classification must condition on an anchor label.
    SoftLabelMatrix anchored_marginals;
    std::vector<Vec2> posterior_mean;   // E[mu_k | X], over labelings with k nonempty
    std::vector<double> nonempty_mass;  // posterior mass of {cluster k nonempty}
};

inline constexpr double kMaxEnumeration = 1048576.0;  // 2^20 labelings

ExactPosterior enumerate_posterior(const DataSet& data);

}  // namespace cvb
