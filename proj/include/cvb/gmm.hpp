#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "cvb/engine.hpp"
#include "cvb/mathutil.hpp"
#include "cvb/rng.hpp"

namespace cvb {

// All ELBO and evidence values in this module drop the shared additive
// constant -log(zeta * K^N) of the flat-prior clustering model; it cancels
// in every comparison and weight computation.

// A cluster or transition cell whose total assignment weight falls below
// this is treated as empty: its Gaussian factor is kept unchanged and its
// ELBO contribution is evaluated exactly under the kept factor. Refitting
// such cells would let the flat prior's unbounded mass leak into the
// normalizers (sigma^2 = 1/weight diverges).
inline constexpr double kEmptyWeight = 1e-12;

struct DataSet {
    std::vector<Vec2> x;  // N observations
    int K = 0;            // cluster count

    int n() const { return static_cast<int>(x.size()); }
};

// Hard assignments: one cluster index per observation (one-hot columns).
struct LabelMatrix {
    int K = 0;
    std::vector<int> assign;  // size N, values in [0, K)

    int n() const { return static_cast<int>(assign.size()); }
};

// Soft assignments: K x N column-stochastic matrix.
struct SoftLabelMatrix {
    int K = 0;
    int N = 0;
    std::vector<double> p;  // row-major K x N

    SoftLabelMatrix() = default;
    SoftLabelMatrix(int K_, int N_, double fill = 0.0) : K(K_), N(N_), p(K_ * N_, fill) {}
    double& at(int k, int i) { return p[static_cast<std::size_t>(k) * N + i]; }
    double at(int k, int i) const { return p[static_cast<std::size_t>(k) * N + i]; }

    static SoftLabelMatrix from_hard(const LabelMatrix& labels);
};

struct ClusterStats {
    std::vector<Vec2> mu_bar;        // posterior means
    std::vector<double> sigma_bar;   // posterior scales, 1/sqrt(weight sum)
    std::vector<double> log_gamma;   // log of the per-cluster evidence weight
    std::vector<bool> empty;         // weight sum vanished; caller carries previous
};

// True cluster means for the reproduction layout: unit-square corners
// scaled by R and offset by (1,1). For K < 4 the first K corners are used.
std::vector<Vec2> true_means(int K, double radius);

// Initial means for all algorithms: the unit-square corners (radius 1,
// no offset).
std::vector<Vec2> init_means(int K);

struct GeneratedData {
    DataSet data;
    LabelMatrix truth;
    std::vector<Vec2> means;
};

// Draws N points, each from N(mu_k, I2) with k uniform over K.
// Per point the stream consumes one uniform (cluster) and two normals.
GeneratedData generate_data(int K, double radius, int N, std::uint64_t seed,
                            std::uint64_t stream_id = 0);

// Posterior mean/scale/log-weight per cluster under the given (hard or
// soft) assignment weights.
ClusterStats posterior_stats(const DataSet& data, const SoftLabelMatrix& weights);
ClusterStats posterior_stats(const DataSet& data, const LabelMatrix& labels);

// ---- Mean-field models -------------------------------------------------
// The constructor derives the initial label factor from the initial
// cluster parameters (that ELBO seeds the stopping rule); slot 0 then
// refreshes the cluster parameters and slot 1 the label factor, so one
// marginal changes per engine iteration. Every update returns the exact
// ELBO of the refreshed approximation.

class KMeansModel : public ConditionalModel {
public:
    KMeansModel(const DataSet& data, std::vector<Vec2> means);
    std::size_t slot_count() const override { return 2; }
    double update_slot(std::size_t slot) override;
    double initial_elbo() const override { return init_elbo_; }
    bool last_update_kept_stats() const override { return kept_; }

    const std::vector<Vec2>& means() const { return means_; }
    const LabelMatrix& labels() const { return labels_; }

private:
    const DataSet& data_;
    std::vector<Vec2> means_;
    LabelMatrix labels_;
    double init_elbo_ = 0.0;
    bool kept_ = false;

    double plugin_elbo() const;
};

class Em1Model : public ConditionalModel {
public:
    Em1Model(const DataSet& data, std::vector<Vec2> means, double sigma0 = 1.0);
    std::size_t slot_count() const override { return 2; }
    double update_slot(std::size_t slot) override;
    double initial_elbo() const override { return init_elbo_; }
    bool last_update_kept_stats() const override { return kept_; }

    const std::vector<Vec2>& means() const { return means_; }
    const std::vector<double>& sigmas() const { return sigmas_; }
    const LabelMatrix& labels() const { return labels_; }

private:
    const DataSet& data_;
    std::vector<Vec2> means_;
    std::vector<double> sigmas_;
    LabelMatrix labels_;
    double init_elbo_ = 0.0;
    bool kept_ = false;
};

class Em2Model : public ConditionalModel {
public:
    Em2Model(const DataSet& data, std::vector<Vec2> means);
    std::size_t slot_count() const override { return 2; }
    double update_slot(std::size_t slot) override;
    double initial_elbo() const override { return init_elbo_; }
    bool last_update_kept_stats() const override { return kept_; }

    const std::vector<Vec2>& means() const { return means_; }
    const SoftLabelMatrix& responsibilities() const { return resp_; }

private:
    const DataSet& data_;
    std::vector<Vec2> means_;
    SoftLabelMatrix resp_;
    double init_elbo_ = 0.0;
    bool kept_ = false;
};

class VbModel : public ConditionalModel {
public:
    VbModel(const DataSet& data, std::vector<Vec2> means, double sigma0 = 1.0);
    std::size_t slot_count() const override { return 2; }
    double update_slot(std::size_t slot) override;
    double initial_elbo() const override { return init_elbo_; }
    bool last_update_kept_stats() const override { return kept_; }

    const std::vector<Vec2>& means() const { return means_; }
    const std::vector<double>& sigmas() const { return sigmas_; }
    const SoftLabelMatrix& responsibilities() const { return resp_; }

private:
    const DataSet& data_;
    std::vector<Vec2> means_;     // mu~_k
    std::vector<double> sigmas_;  // sigma~_k
    SoftLabelMatrix resp_;        // p~_{k,i}
    double init_elbo_ = 0.0;
    bool kept_ = false;

    double label_entropy() const;
};

// ---- Ternary-partition CVB ---------------------------------------------

// Per-anchor CVB state. Conditional Gaussian stats are indexed by
// (cluster k, anchor-label value m); W[i] is the K x K left-stochastic
// transition matrix from l_j to l_i, with W[j] = I by convention.
struct CvbStructureState {
    int anchor = 0;                      // data index j
    int K = 0;
    int N = 0;
    std::vector<Vec2> mu;                // K*K, index k*K + m
    std::vector<double> sigma;           // K*K
    std::vector<double> W;               // N*K*K, element (i, k, m)
    std::vector<double> p_anchor;        // K weights for l_j
    double elbo = 0.0;                   // log zeta_2 at the last reverse step

    double w(int i, int k, int m) const {
        return W[(static_cast<std::size_t>(i) * K + k) * K + m];
    }
    double& w(int i, int k, int m) {
        return W[(static_cast<std::size_t>(i) * K + k) * K + m];
    }
    Vec2 mu_km(int k, int m) const { return mu[static_cast<std::size_t>(k) * K + m]; }
    double sigma_km(int k, int m) const { return sigma[static_cast<std::size_t>(k) * K + m]; }
};

// The constructor runs the initial forward step (transition matrices from
// the initial stats, which are shared across anchor values, so the first
// W columns are m-independent). Slot 0 (reverse) refreshes the
// conditional stats and anchor label weights; slot 1 (forward) refreshes
// the transition matrices.
class CvbAnchorModel : public ConditionalModel {
public:
    CvbAnchorModel(const DataSet& data, int anchor, std::vector<Vec2> init_means,
                   double sigma0 = 1.0);
    std::size_t slot_count() const override { return 2; }
    double update_slot(std::size_t slot) override;
    double initial_elbo() const override { return init_elbo_; }
    bool last_update_kept_stats() const override { return kept_; }

    const CvbStructureState& state() const { return state_; }

private:
    const DataSet& data_;
    CvbStructureState state_;
    double init_elbo_ = 0.0;
    bool kept_ = false;

    double forward_step();
    double reverse_step();
};

struct CvbEstimates {
    std::vector<Vec2> means;                // Upsilon_hat(j)
    LabelMatrix labels;                     // argmax of marginal label weights
    SoftLabelMatrix label_marginals;        // q~_i(j) = W[i] p_j
};

CvbEstimates cvb_marginal_estimates(const CvbStructureState& state);

struct SchemeResult {
    std::vector<Vec2> means;
    LabelMatrix labels;
    std::vector<double> weights;  // CVB3 only: q*
    double elbo = 0.0;            // heuristic for CVB1/CVB3, exact for CVB2
};

SchemeResult scheme_cvb1(const std::vector<CvbStructureState>& states);
SchemeResult scheme_cvb2(const std::vector<CvbStructureState>& states);
SchemeResult scheme_cvb3(const std::vector<CvbStructureState>& states);

// ---- Metrics -------------------------------------------------------------

// (1/N) * sum_k max_m |{i : pred(i)=k and truth(i)=m}|.
double purity(const LabelMatrix& pred, const LabelMatrix& truth);

// (1/K) * min over label permutations of the squared Frobenius distance.
double mse_means(const std::vector<Vec2>& pred, const std::vector<Vec2>& truth);

// ---- Run wrappers ----------------------------------------------------------

struct AlgorithmRun {
    Trace trace;
    std::vector<Vec2> means;
    LabelMatrix labels;
};

AlgorithmRun kmeans_run(const DataSet& data, std::vector<Vec2> init, const StoppingRule& rule);
AlgorithmRun em1_run(const DataSet& data, std::vector<Vec2> init, const StoppingRule& rule);
AlgorithmRun em2_run(const DataSet& data, std::vector<Vec2> init, const StoppingRule& rule);
AlgorithmRun vb_run(const DataSet& data, std::vector<Vec2> init, const StoppingRule& rule);

struct CvbAnchorRun {
    CvbStructureState state;
    Trace trace;
};

CvbAnchorRun cvb_run(const DataSet& data, int anchor, std::vector<Vec2> init,
                     const StoppingRule& rule);

// Evenly spaced anchor subset of the given size (all anchors if count <= 0
// or count >= N).
std::vector<int> anchor_subset(int N, int count);

}  // namespace cvb
