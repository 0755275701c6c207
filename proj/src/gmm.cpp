#include "cvb/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cvb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(2*pi*e*sigma^2), the entropy of an isotropic 2-D Gaussian.
double log_entropy_iso(double sigma) {
    return kLog2Pi + 1.0 + 2.0 * std::log(sigma);
}

// Factor scales are capped at the unit initialization scale. Clusters
// holding at least unit weight follow 1/sqrt(n) exactly; letting the
// scale grow past 1 on sub-unit weights would harvest unbounded credit
// from the flat prior and break the ELBO-vs-evidence comparison.
double capped_scale(double weight_sum) {
    return std::min(1.0, 1.0 / std::sqrt(weight_sum));
}

int argmax_lowest(std::span<const double> v) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(v.size()); ++k)
        if (v[k] > v[best]) best = k;
    return best;
}

}  // namespace

SoftLabelMatrix SoftLabelMatrix::from_hard(const LabelMatrix& labels) {
    SoftLabelMatrix soft(labels.K, labels.n());
    for (int i = 0; i < labels.n(); ++i) soft.at(labels.assign[i], i) = 1.0;
    return soft;
}

std::vector<Vec2> true_means(int K, double radius) {
    static const Vec2 corners[4] = {{-1.0, 1.0}, {1.0, 1.0}, {1.0, -1.0}, {-1.0, -1.0}};
    if (K < 1 || K > 4) throw std::invalid_argument("true_means: K must be in [1,4]");
    std::vector<Vec2> mu(K);
    for (int k = 0; k < K; ++k) mu[k] = radius * corners[k] + Vec2{1.0, 1.0};
    return mu;
}

std::vector<Vec2> init_means(int K) {
    static const Vec2 corners[4] = {{-1.0, 1.0}, {1.0, 1.0}, {1.0, -1.0}, {-1.0, -1.0}};
    if (K < 1 || K > 4) throw std::invalid_argument("init_means: K must be in [1,4]");
    return std::vector<Vec2>(corners, corners + K);
}

GeneratedData generate_data(int K, double radius, int N, std::uint64_t seed,
                            std::uint64_t stream_id) {
    if (N < 1 || K < 1) throw std::invalid_argument("generate_data: need N >= 1, K >= 1");
    if (radius < 0.0) throw std::invalid_argument("generate_data: radius must be >= 0");
    GeneratedData out;
    out.means = true_means(K, radius);
    out.data.K = K;
    out.data.x.resize(N);
    out.truth.K = K;
    out.truth.assign.resize(N);
    CounterRng rng(seed, stream_id);
    for (int i = 0; i < N; ++i) {
        const int k = rng.next_index(K);
        out.truth.assign[i] = k;
        out.data.x[i] = out.means[k] + Vec2{rng.next_normal(), rng.next_normal()};
    }
    return out;
}

ClusterStats posterior_stats(const DataSet& data, const SoftLabelMatrix& weights) {
    if (weights.N != data.n() || weights.K != data.K)
        throw std::invalid_argument("posterior_stats: weight matrix shape mismatch");
    const int K = data.K, N = data.n();
    ClusterStats st;
    st.mu_bar.resize(K);
    st.sigma_bar.assign(K, 0.0);
    st.log_gamma.assign(K, 0.0);
    st.empty.assign(K, false);
    for (int k = 0; k < K; ++k) {
        double n = 0.0, q = 0.0;
        Vec2 s;
        for (int i = 0; i < N; ++i) {
            const double w = weights.at(k, i);
            n += w;
            s += w * data.x[i];
            q += w * norm2(data.x[i]);
        }
        if (n < kEmptyWeight) {
            st.empty[k] = true;
            continue;
        }
        st.mu_bar[k] = (1.0 / n) * s;
        st.sigma_bar[k] = 1.0 / std::sqrt(n);
        // log gamma_k = log(2 pi sigma_bar^2) + sum_i w log N(x_i; mu_bar, I2)
        const double wlogn = -n * kLog2Pi - 0.5 * (q - norm2(s) / n);
        st.log_gamma[k] = kLog2Pi - std::log(n) + wlogn;
    }
    return st;
}

ClusterStats posterior_stats(const DataSet& data, const LabelMatrix& labels) {
    return posterior_stats(data, SoftLabelMatrix::from_hard(labels));
}

// ---- k-means / ICM --------------------------------------------------------

KMeansModel::KMeansModel(const DataSet& data, std::vector<Vec2> means)
    : data_(data), means_(std::move(means)) {
    if (static_cast<int>(means_.size()) != data_.K)
        throw std::invalid_argument("KMeansModel: need K initial means");
    labels_.K = data_.K;
    labels_.assign.resize(data_.n());
    init_elbo_ = update_slot(1);  // initial assignment from the initial means
}

double KMeansModel::plugin_elbo() const {
    double e = 0.0;
    for (int i = 0; i < data_.n(); ++i)
        e += log_normal2_iso(data_.x[i], means_[labels_.assign[i]]);
    return e;
}

double KMeansModel::update_slot(std::size_t slot) {
    kept_ = false;
    if (slot == 1) {  // nearest-mean assignment, lowest index on ties
        for (int i = 0; i < data_.n(); ++i) {
            int best = 0;
            double bestd = norm2(data_.x[i] - means_[0]);
            for (int k = 1; k < data_.K; ++k) {
                const double d = norm2(data_.x[i] - means_[k]);
                if (d < bestd) {
                    bestd = d;
                    best = k;
                }
            }
            labels_.assign[i] = best;
        }
        return plugin_elbo();
    }
    const ClusterStats st = posterior_stats(data_, labels_);
    for (int k = 0; k < data_.K; ++k) {
        if (st.empty[k]) {
            kept_ = true;  // no update found for this cluster
        } else {
            means_[k] = st.mu_bar[k];
        }
    }
    return plugin_elbo();
}

// ---- EM1 -------------------------------------------------------------------

Em1Model::Em1Model(const DataSet& data, std::vector<Vec2> means, double sigma0)
    : data_(data), means_(std::move(means)), sigmas_(data.K, sigma0) {
    if (static_cast<int>(means_.size()) != data_.K)
        throw std::invalid_argument("Em1Model: need K initial means");
    labels_.K = data_.K;
    labels_.assign.resize(data_.n());
    init_elbo_ = update_slot(1);
}

namespace {

// ELBO of a hard-label state with Gaussian parameter factors
// N(m_k, s_k^2 I2): per cluster sum_i l_ki (log N(x_i; m_k) - s_k^2) plus
// the factor entropy log(2 pi e s_k^2).
double hard_label_gauss_elbo(const DataSet& data, const LabelMatrix& labels,
                             const std::vector<Vec2>& means,
                             const std::vector<double>& sigmas) {
    double e = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        const int k = labels.assign[i];
        e += log_normal2_iso(data.x[i], means[k]) - sigmas[k] * sigmas[k];
    }
    for (int k = 0; k < data.K; ++k) e += log_entropy_iso(sigmas[k]);
    return e;
}

}  // namespace

double Em1Model::update_slot(std::size_t slot) {
    kept_ = false;
    if (slot == 1) {  // variance-penalized hard assignment
        std::vector<double> score(data_.K);
        for (int i = 0; i < data_.n(); ++i) {
            for (int k = 0; k < data_.K; ++k)
                score[k] = log_normal2_iso(data_.x[i], means_[k]) - sigmas_[k] * sigmas_[k];
            labels_.assign[i] = argmax_lowest(score);
        }
    } else {
        const ClusterStats st = posterior_stats(data_, labels_);
        for (int k = 0; k < data_.K; ++k) {
            if (st.empty[k]) {
                kept_ = true;
            } else {
                means_[k] = st.mu_bar[k];
                sigmas_[k] = std::min(1.0, st.sigma_bar[k]);
            }
        }
    }
    return hard_label_gauss_elbo(data_, labels_, means_, sigmas_);
}

// ---- EM2 -------------------------------------------------------------------

Em2Model::Em2Model(const DataSet& data, std::vector<Vec2> means)
    : data_(data), means_(std::move(means)), resp_(data.K, data.n()) {
    if (static_cast<int>(means_.size()) != data_.K)
        throw std::invalid_argument("Em2Model: need K initial means");
    init_elbo_ = update_slot(1);
}

double Em2Model::update_slot(std::size_t slot) {
    kept_ = false;
    if (slot == 1) {  // responsibilities proportional to the likelihood
        std::vector<double> logits(data_.K);
        for (int i = 0; i < data_.n(); ++i) {
            for (int k = 0; k < data_.K; ++k)
                logits[k] = log_normal2_iso(data_.x[i], means_[k]);
            softmax_inplace(logits);
            for (int k = 0; k < data_.K; ++k) resp_.at(k, i) = logits[k];
        }
    } else {
        const ClusterStats st = posterior_stats(data_, resp_);
        for (int k = 0; k < data_.K; ++k) {
            if (st.empty[k]) {
                kept_ = true;
            } else {
                means_[k] = st.mu_bar[k];
            }
        }
    }
    double e = 0.0;
    for (int i = 0; i < data_.n(); ++i)
        for (int k = 0; k < data_.K; ++k) {
            const double w = resp_.at(k, i);
            if (w > 0.0) e += w * log_normal2_iso(data_.x[i], means_[k]) - xlogx(w);
        }
    return e;
}

// ---- VB --------------------------------------------------------------------

VbModel::VbModel(const DataSet& data, std::vector<Vec2> means, double sigma0)
    : data_(data), means_(std::move(means)), sigmas_(data.K, sigma0),
      resp_(data.K, data.n()) {
    if (static_cast<int>(means_.size()) != data_.K)
        throw std::invalid_argument("VbModel: need K initial means");
    init_elbo_ = update_slot(1);
}

double VbModel::label_entropy() const {
    double h = 0.0;
    for (double w : resp_.p) h -= xlogx(w);
    return h;
}

double VbModel::update_slot(std::size_t slot) {
    kept_ = false;
    if (slot == 1) {  // soft labels with the variance penalty
        std::vector<double> logits(data_.K);
        for (int i = 0; i < data_.n(); ++i) {
            for (int k = 0; k < data_.K; ++k)
                logits[k] = log_normal2_iso(data_.x[i], means_[k]) - sigmas_[k] * sigmas_[k];
            softmax_inplace(logits);
            for (int k = 0; k < data_.K; ++k) resp_.at(k, i) = logits[k];
        }
    } else {
        const ClusterStats st = posterior_stats(data_, resp_);
        for (int k = 0; k < data_.K; ++k) {
            if (st.empty[k]) {
                kept_ = true;
            } else {
                means_[k] = st.mu_bar[k];
                sigmas_[k] = std::min(1.0, st.sigma_bar[k]);
            }
        }
    }
    double e = label_entropy();
    for (int k = 0; k < data_.K; ++k) {
        const double pen = sigmas_[k] * sigmas_[k];
        for (int i = 0; i < data_.n(); ++i) {
            const double w = resp_.at(k, i);
            if (w > 0.0) e += w * (log_normal2_iso(data_.x[i], means_[k]) - pen);
        }
        e += log_entropy_iso(sigmas_[k]);
    }
    return e;
}

// ---- CVB (ternary partition per anchor) ------------------------------------

CvbAnchorModel::CvbAnchorModel(const DataSet& data, int anchor,
                               std::vector<Vec2> init_means, double sigma0)
    : data_(data) {
    const int K = data.K, N = data.n();
    if (static_cast<int>(init_means.size()) != K)
        throw std::invalid_argument("CvbAnchorModel: need K initial means");
    if (anchor < 0 || anchor >= N)
        throw std::invalid_argument("CvbAnchorModel: anchor out of range");
    state_.anchor = anchor;
    state_.K = K;
    state_.N = N;
    state_.mu.resize(static_cast<std::size_t>(K) * K);
    state_.sigma.assign(static_cast<std::size_t>(K) * K, sigma0);
    for (int k = 0; k < K; ++k)
        for (int m = 0; m < K; ++m) state_.mu[static_cast<std::size_t>(k) * K + m] = init_means[k];
    state_.W.assign(static_cast<std::size_t>(N) * K * K, 0.0);
    state_.p_anchor.assign(K, 1.0 / K);
    init_elbo_ = forward_step();
}

double CvbAnchorModel::update_slot(std::size_t slot) {
    kept_ = false;
    return slot == 0 ? reverse_step() : forward_step();
}

double CvbAnchorModel::forward_step() {
    const int K = state_.K, N = state_.N, j = state_.anchor;
    // log omega_{k,m,i} = log N(x_i; mu_km, I2) - sigma_km^2
    std::vector<double> logits(K);
    std::vector<double> colsum(K, 0.0);  // per m: sum_{i != j} lse_k
    std::vector<double> anchor_diag(K, 0.0);
    for (int i = 0; i < N; ++i) {
        for (int m = 0; m < K; ++m) {
            for (int k = 0; k < K; ++k) {
                const std::size_t km = static_cast<std::size_t>(k) * K + m;
                logits[k] = log_normal2_iso(data_.x[i], state_.mu[km]) -
                            state_.sigma[km] * state_.sigma[km];
            }
            if (i == j) {
                anchor_diag[m] = logits[m];
                for (int k = 0; k < K; ++k) state_.w(i, k, m) = (k == m) ? 1.0 : 0.0;
            } else {
                colsum[m] += softmax_inplace(logits);
                for (int k = 0; k < K; ++k) state_.w(i, k, m) = logits[k];
            }
        }
    }
    // ELBO = lse_m [ sum_k log kappa_km + log omega(j; m, m) + colsum_m ]
    std::vector<double> score(K);
    for (int m = 0; m < K; ++m) {
        double s = anchor_diag[m] + colsum[m];
        for (int k = 0; k < K; ++k)
            s += log_entropy_iso(state_.sigma[static_cast<std::size_t>(k) * K + m]);
        score[m] = s;
    }
    return log_sum_exp(score);
}

double CvbAnchorModel::reverse_step() {
    const int K = state_.K, N = state_.N, j = state_.anchor;
    std::vector<double> log_omega(static_cast<std::size_t>(K) * K, 0.0);
    for (int k = 0; k < K; ++k) {
        for (int m = 0; m < K; ++m) {
            double n = 0.0, q = 0.0, ent = 0.0;
            Vec2 s;
            for (int i = 0; i < N; ++i) {
                const double w = (i == j) ? (k == m ? 1.0 : 0.0) : state_.w(i, k, m);
                if (w <= 0.0) continue;
                n += w;
                s += w * data_.x[i];
                q += w * norm2(data_.x[i]);
                if (i != j) ent -= xlogx(w);
            }
            const std::size_t km = static_cast<std::size_t>(k) * K + m;
            if (n < kEmptyWeight) {
                kept_ = true;  // factor kept unchanged for this cell
            } else {
                state_.mu[km] = (1.0 / n) * s;
                state_.sigma[km] = capped_scale(n);
            }
            // Exact contribution of the (possibly kept) Gaussian factor:
            // sum_i w [log N(x_i; mu) - sigma^2] + log(2 pi e sigma^2) + ent.
            // For refitted cells this reduces to log(2 pi sigma_bar^2)
            // + sum_i w log N(x_i; mu_bar) + ent, the gamma-style form.
            const Vec2 mu = state_.mu[km];
            const double sig = state_.sigma[km];
            const double wlogn =
                -n * kLog2Pi - 0.5 * (q - 2.0 * dot(s, mu) + n * norm2(mu));
            log_omega[km] = wlogn - n * sig * sig + kLog2Pi + 1.0 +
                            2.0 * std::log(sig) + ent;
        }
    }
    std::vector<double> score(K, 0.0);
    for (int m = 0; m < K; ++m)
        for (int k = 0; k < K; ++k) score[m] += log_omega[static_cast<std::size_t>(k) * K + m];
    const double zeta2 = log_sum_exp(score);
    softmax_inplace(score);
    state_.p_anchor.assign(score.begin(), score.end());
    state_.elbo = zeta2;
    return zeta2;
}

CvbEstimates cvb_marginal_estimates(const CvbStructureState& state) {
    const int K = state.K, N = state.N;
    CvbEstimates est;
    est.means.assign(K, Vec2{});
    for (int k = 0; k < K; ++k)
        for (int m = 0; m < K; ++m)
            est.means[k] += state.p_anchor[m] * state.mu_km(k, m);
    est.label_marginals = SoftLabelMatrix(K, N);
    est.labels.K = K;
    est.labels.assign.resize(N);
    std::vector<double> q(K);
    for (int i = 0; i < N; ++i) {
        for (int k = 0; k < K; ++k) {
            double s = 0.0;
            for (int m = 0; m < K; ++m) s += state.w(i, k, m) * state.p_anchor[m];
            q[k] = s;
            est.label_marginals.at(k, i) = s;
        }
        est.labels.assign[i] = argmax_lowest(q);
    }
    return est;
}

namespace {

SchemeResult combine_structures(const std::vector<CvbStructureState>& states,
                                std::span<const double> weights) {
    const int K = states.front().K, N = states.front().N;
    SchemeResult out;
    out.means.assign(K, Vec2{});
    out.labels.K = K;
    out.labels.assign.resize(N);
    std::vector<std::vector<double>> qsum(N, std::vector<double>(K, 0.0));
    for (std::size_t t = 0; t < states.size(); ++t) {
        const CvbEstimates est = cvb_marginal_estimates(states[t]);
        for (int k = 0; k < K; ++k) out.means[k] += weights[t] * est.means[k];
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < K; ++k)
                qsum[i][k] += weights[t] * est.label_marginals.at(k, i);
    }
    for (int i = 0; i < N; ++i) out.labels.assign[i] = argmax_lowest(qsum[i]);
    return out;
}

}  // namespace

SchemeResult scheme_cvb1(const std::vector<CvbStructureState>& states) {
    if (states.empty()) throw std::invalid_argument("scheme_cvb1: no structures");
    const int K = states.front().K, N = states.front().N;
    SchemeResult out;
    out.means.assign(K, Vec2{});
    out.labels.K = K;
    out.labels.assign.assign(N, -1);
    const double wj = 1.0 / static_cast<double>(states.size());
    double elbo = 0.0;
    // Each structure labels its own anchor; remaining points (present only
    // when anchors are subsampled) fall back to the uniform mixture of
    // marginals.
    std::vector<std::vector<double>> qsum(N, std::vector<double>(K, 0.0));
    for (const CvbStructureState& st : states) {
        const CvbEstimates est = cvb_marginal_estimates(st);
        for (int k = 0; k < K; ++k) out.means[k] += wj * est.means[k];
        out.labels.assign[st.anchor] = est.labels.assign[st.anchor];
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < K; ++k)
                qsum[i][k] += wj * est.label_marginals.at(k, i);
        elbo += wj * st.elbo;
    }
    for (int i = 0; i < N; ++i)
        if (out.labels.assign[i] < 0) out.labels.assign[i] = argmax_lowest(qsum[i]);
    out.elbo = elbo;  // heuristic: uniform average of per-structure ELBOs
    return out;
}

SchemeResult scheme_cvb2(const std::vector<CvbStructureState>& states) {
    if (states.empty()) throw std::invalid_argument("scheme_cvb2: no structures");
    std::size_t best = 0;
    for (std::size_t t = 1; t < states.size(); ++t)
        if (states[t].elbo > states[best].elbo) best = t;
    const CvbEstimates est = cvb_marginal_estimates(states[best]);
    SchemeResult out;
    out.means = est.means;
    out.labels = est.labels;
    out.elbo = states[best].elbo;
    return out;
}

SchemeResult scheme_cvb3(const std::vector<CvbStructureState>& states) {
    if (states.empty()) throw std::invalid_argument("scheme_cvb3: no structures");
    std::vector<double> logw(states.size());
    for (std::size_t t = 0; t < states.size(); ++t) logw[t] = states[t].elbo;
    softmax_inplace(logw);
    SchemeResult out = combine_structures(states, logw);
    out.weights = logw;
    double elbo = 0.0;  // heuristic: q*-weighted average of per-structure ELBOs
    for (std::size_t t = 0; t < states.size(); ++t) elbo += logw[t] * states[t].elbo;
    out.elbo = elbo;
    return out;
}

// ---- Metrics ----------------------------------------------------------------

double purity(const LabelMatrix& pred, const LabelMatrix& truth) {
    if (pred.n() != truth.n()) throw std::invalid_argument("purity: size mismatch");
    const int N = pred.n();
    std::vector<std::vector<int>> counts(pred.K, std::vector<int>(truth.K, 0));
    for (int i = 0; i < N; ++i) ++counts[pred.assign[i]][truth.assign[i]];
    double s = 0.0;
    for (int k = 0; k < pred.K; ++k)
        s += *std::max_element(counts[k].begin(), counts[k].end());
    return s / static_cast<double>(N);
}

double mse_means(const std::vector<Vec2>& pred, const std::vector<Vec2>& truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("mse_means: size mismatch");
    const int K = static_cast<int>(pred.size());
    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    double best = kInf;
    do {
        double s = 0.0;
        for (int k = 0; k < K; ++k) s += norm2(pred[perm[k]] - truth[k]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(K);
}

// ---- Run wrappers -------------------------------------------------------------

AlgorithmRun kmeans_run(const DataSet& data, std::vector<Vec2> init, const StoppingRule& rule) {
    KMeansModel m(data, std::move(init));
    AlgorithmRun out;
    out.trace = run(m, rule);
    out.means = m.means();
    out.labels = m.labels();
    return out;
}

AlgorithmRun em1_run(const DataSet& data, std::vector<Vec2> init, const StoppingRule& rule) {
    Em1Model m(data, std::move(init));
    AlgorithmRun out;
    out.trace = run(m, rule);
    out.means = m.means();
    out.labels = m.labels();
    return out;
}

namespace {

LabelMatrix hard_from_soft(const SoftLabelMatrix& soft) {
    LabelMatrix labels;
    labels.K = soft.K;
    labels.assign.resize(soft.N);
    std::vector<double> col(soft.K);
    for (int i = 0; i < soft.N; ++i) {
        for (int k = 0; k < soft.K; ++k) col[k] = soft.at(k, i);
        labels.assign[i] = argmax_lowest(col);
    }
    return labels;
}

}  // namespace

AlgorithmRun em2_run(const DataSet& data, std::vector<Vec2> init, const StoppingRule& rule) {
    Em2Model m(data, std::move(init));
    AlgorithmRun out;
    out.trace = run(m, rule);
    out.means = m.means();
    out.labels = hard_from_soft(m.responsibilities());
    return out;
}

AlgorithmRun vb_run(const DataSet& data, std::vector<Vec2> init, const StoppingRule& rule) {
    VbModel m(data, std::move(init));
    AlgorithmRun out;
    out.trace = run(m, rule);
    out.means = m.means();
    out.labels = hard_from_soft(m.responsibilities());
    return out;
}

CvbAnchorRun cvb_run(const DataSet& data, int anchor, std::vector<Vec2> init,
                     const StoppingRule& rule) {
    CvbAnchorModel m(data, anchor, std::move(init));
    CvbAnchorRun out;
    out.trace = run(m, rule);
    out.state = m.state();
    return out;
}

std::vector<int> anchor_subset(int N, int count) {
    std::vector<int> anchors;
    if (count <= 0 || count >= N) {
        anchors.resize(N);
        std::iota(anchors.begin(), anchors.end(), 0);
        return anchors;
    }
    for (int t = 0; t < count; ++t) {
        const int j = count == 1
                          ? 0
                          : static_cast<int>(std::lround(
                                static_cast<double>(t) * (N - 1) / (count - 1)));
        if (anchors.empty() || anchors.back() != j) anchors.push_back(j);
    }
    return anchors;
}

}  // namespace cvb
