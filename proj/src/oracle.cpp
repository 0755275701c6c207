#include "cvb/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cvb {

namespace {

struct ClusterAcc {
    double n = 0.0;
    Vec2 s;
    double q = 0.0;
};

double log_gamma_of(const ClusterAcc& c) {
    // An empty cluster carries the entropy credit of the unit-scale
    // factor, 2*pi*e, mirroring the kept-factor convention on the
    // algorithm side.
    if (c.n <= 0.0) return kLog2Pi + 1.0;
    return kLog2Pi - std::log(c.n) - c.n * kLog2Pi - 0.5 * (c.q - norm2(c.s) / c.n);
}

// Depth-first walk over all K^N labelings with incremental sufficient
// statistics; visit(logf) sees every labeling in a fixed order, and
// leaf_labels points at the current assignment.
template <typename Visit>
void walk(const DataSet& data, std::vector<ClusterAcc>& acc, std::vector<int>& labels,
          int i, Visit&& visit) {
    const int K = data.K;
    if (i == data.n()) {
        double logf = 0.0;
        for (const ClusterAcc& c : acc) logf += log_gamma_of(c);
        visit(logf);
        return;
    }
    for (int k = 0; k < K; ++k) {
        ClusterAcc& c = acc[k];
        c.n += 1.0;
        c.s += data.x[i];
        c.q += norm2(data.x[i]);
        labels[i] = k;
        walk(data, acc, labels, i + 1, visit);
        c.n -= 1.0;
        c.s -= data.x[i];
        c.q -= norm2(data.x[i]);
    }
}

}  // namespace

ExactPosterior enumerate_posterior(const DataSet& data) {
    const int K = data.K, N = data.n();
    if (K < 1 || N < 1) throw std::invalid_argument("enumerate_posterior: empty instance");
    if (std::pow(static_cast<double>(K), static_cast<double>(N)) > kMaxEnumeration)
        throw std::invalid_argument(
            "enumerate_posterior: instance too large, K^N must be <= 2^20");

    std::vector<ClusterAcc> acc(K);
    std::vector<int> labels(N, 0);

    // Pass 1: global maximum of log f(L, X) for a stable normalization.
    double maxlog = -std::numeric_limits<double>::infinity();
    walk(data, acc, labels, 0, [&](double logf) { maxlog = std::max(maxlog, logf); });

    // Pass 2: evidence, label marginals, and posterior cluster means.
    ExactPosterior out;
    out.label_marginals = SoftLabelMatrix(K, N);
    out.anchored_marginals = SoftLabelMatrix(K, N);
    out.posterior_mean.assign(K, Vec2{});
    out.nonempty_mass.assign(K, 0.0);
    double total = 0.0, anchored_total = 0.0;
    walk(data, acc, labels, 0, [&](double logf) {
        const double w = std::exp(logf - maxlog);
        total += w;
        for (int i = 0; i < N; ++i) out.label_marginals.at(labels[i], i) += w;
        if (labels[0] == 0) {
            anchored_total += w;
            for (int i = 0; i < N; ++i) out.anchored_marginals.at(labels[i], i) += w;
        }
        for (int k = 0; k < K; ++k) {
            if (acc[k].n > 0.0) {
                out.posterior_mean[k] += (w / acc[k].n) * acc[k].s;
                out.nonempty_mass[k] += w;
            }
        }
    });

    out.log_evidence = maxlog + std::log(total);
    for (double& v : out.label_marginals.p) v /= total;
    for (double& v : out.anchored_marginals.p) v /= anchored_total;
    for (int k = 0; k < K; ++k) {
        if (out.nonempty_mass[k] > 0.0)
            out.posterior_mean[k] = (1.0 / out.nonempty_mass[k]) * out.posterior_mean[k];
        out.nonempty_mass[k] /= total;
    }
    return out;
}

}  // namespace cvb
