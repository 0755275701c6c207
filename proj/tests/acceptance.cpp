// Acceptance suite: runs every acceptance criterion at its stated
// tolerance and prints one [PASS]/[FAIL] line per criterion. Exit status
// is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cvb/augment.hpp"
#include "cvb/bivariate.hpp"
#include "cvb/copula.hpp"
#include "cvb/divergence.hpp"
#include "cvb/experiment.hpp"
#include "cvb/oracle.hpp"
#include "cvb/rng.hpp"

using namespace cvb;

namespace {

int g_failures = 0;

struct Check {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back(what);
        }
    }
};

void report(int index, const std::string& name, const Check& c, double seconds) {
    std::printf("[%s] criterion %d: %s (%.1fs)\n", c.pass ? "PASS" : "FAIL", index,
                name.c_str(), seconds);
    for (const std::string& n : c.notes) std::printf("       - %s\n", n.c_str());
    if (!c.pass) ++g_failures;
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

bool trace_nondecreasing(const Trace& t) {
    for (const TracePoint& p : t.points)
        if (p.delta < 0.0) return false;  // run() already clamps noise
    return true;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// ---- criterion 1: monotone ELBO traces ------------------------------------

void criterion1() {
    const double t0 = now_seconds();
    Check c;
    const StoppingRule soft{0.01, 500}, hard{0.0, 500};
    int runs = 0;
    try {
        for (double radius : {2.0, 4.0}) {
            for (int seed = 1; seed <= 50; ++seed) {
                const GeneratedData gen = generate_data(4, radius, 100, seed,
                                                        radius == 2.0 ? 0 : 1);
                const std::vector<Vec2> init = init_means(4);
                c.require(trace_nondecreasing(kmeans_run(gen.data, init, hard).trace),
                          "kmeans trace decreased");
                c.require(trace_nondecreasing(em1_run(gen.data, init, hard).trace),
                          "em1 trace decreased");
                c.require(trace_nondecreasing(em2_run(gen.data, init, soft).trace),
                          "em2 trace decreased");
                c.require(trace_nondecreasing(vb_run(gen.data, init, soft).trace),
                          "vb trace decreased");
                for (int j = 0; j < gen.data.n(); ++j)
                    c.require(trace_nondecreasing(cvb_run(gen.data, j, init, soft).trace),
                              "cvb anchor trace decreased");
                ++runs;
            }
        }
    } catch (const std::exception& e) {
        c.require(false, std::string("monotonicity violation raised: ") + e.what());
    }
    c.require(runs == 100, "expected 100 seeded runs per algorithm");
    report(1, "monotone ELBO traces, 100 runs x {VB, EM1, EM2, k-means, CVB/anchor}", c,
           now_seconds() - t0);
}

// ---- criterion 2: bivariate VB reproduction ---------------------------------

void criterion2() {
    const double t0 = now_seconds();
    Check c;
    const BivarTrueModel model{2.0, 1.0, 0.8};
    const BivariateRunResult res =
        run_bivariate(model, CvbBivarState{1.0, 1.0, 0.0}, StoppingRule{0.01, 500});
    c.require(res.trace.converged, "VB run did not converge");
    c.require(res.trace.iterations() == 8,
              "VB iterations = " + std::to_string(res.trace.iterations()) + ", expected 8");
    const double s1sq = res.final_state.sigma1_t * res.final_state.sigma1_t;
    const double s2sq = res.final_state.sigma2_t * res.final_state.sigma2_t;
    c.require(std::abs(s1sq - 1.44) < 1e-4, "sigma1^2 = " + fmt(s1sq) + ", expected 1.44");
    c.require(std::abs(s2sq - 0.36) < 1e-4, "sigma2^2 = " + fmt(s2sq) + ", expected 0.36");
    c.require(std::abs(res.kl_final - 0.5108) < 1e-3,
              "final KL = " + fmt(res.kl_final) + ", expected 0.5108");
    report(2, "bivariate VB: 8 iterations, variances {1.44, 0.36}, KL 0.5108", c,
           now_seconds() - t0);
}

// ---- criterion 3: CVB exactness window --------------------------------------

void criterion3() {
    const double t0 = now_seconds();
    Check c;
    const BivarTrueModel model{2.0, 1.0, 0.8};
    for (double rho0 : {0.60, 0.65, 0.70}) {
        const BivariateRunResult res = run_bivariate(
            model, CvbBivarState{1.0, 1.0, rho0}, StoppingRule{1e-9, 4000});
        c.require(res.kl_final <= 0.01, "rho0 = " + fmt(rho0) + ": converged KL = " +
                                            fmt(res.kl_final) + " > 0.01");
    }
    const BivariateRunResult bad =
        run_bivariate(model, CvbBivarState{1.0, 1.0, -0.5}, StoppingRule{0.01, 500});
    c.require(bad.kl_final <= bad.kl_init + 1e-12,
              "rho0 = -0.5: final KL exceeds the initial KL");
    report(3, "CVB exactness window {0.60, 0.65, 0.70}; no worsening at -0.5", c,
           now_seconds() - t0);
}

// ---- criterion 4: CVB iteration count over the rho grid ----------------------

void criterion4() {
    const double t0 = now_seconds();
    Check c;
    const BivarTrueModel model{2.0, 1.0, 0.8};
    const std::vector<BivariateSweepRow> rows =
        bivariate_grid_sweep(model, default_rho_grid(), StoppingRule{0.01, 500});
    double mean = 0.0;
    for (const BivariateSweepRow& r : rows) mean += static_cast<double>(r.iters);
    mean /= static_cast<double>(rows.size());
    c.require(std::abs(mean - 11.1) <= 3.0,
              "grid mean iterations = " + fmt(mean) + ", expected 11.1 +/- 3");
    report(4, "CVB mean iterations over the 39-point rho grid", c, now_seconds() - t0);
}

// ---- criterion 5: oracle bound suite ----------------------------------------

void criterion5() {
    const double t0 = now_seconds();
    Check c;
    ExperimentConfig config;
    config.experiment = "oracle-check";
    config.seed_count = 200;
    config.base_seed = 1;
    config.threads = 0;
    const std::vector<GmmRunRow> rows = run_oracle_rows(config);

    std::map<std::uint64_t, double> evidence;
    for (const GmmRunRow& r : rows)
        if (r.algorithm == "exact") evidence[r.seed] = r.elbo_final;
    c.require(evidence.size() == 200, "expected 200 instances");

    int violations = 0;
    std::map<std::string, std::pair<double, int>> purity_by_algo;
    for (const GmmRunRow& r : rows) {
        if (r.algorithm != "exact" && r.elbo_final > evidence.at(r.seed) + 1e-9)
            ++violations;
        auto& acc = purity_by_algo[r.algorithm];
        acc.first += r.purity;
        acc.second += 1;
    }
    c.require(violations == 0,
              std::to_string(violations) + " ELBO-above-evidence violations");
    const auto exact_mean =
        purity_by_algo.at("exact").first / purity_by_algo.at("exact").second;
    for (const auto& [algo, acc] : purity_by_algo) {
        if (algo == "exact") continue;
        const double m = acc.first / acc.second;
        c.require(exact_mean >= m - 1e-12, "exact-marginal purity " + fmt(exact_mean) +
                                               " below " + algo + " purity " + fmt(m));
    }
    report(5, "oracle bounds on 200 tiny instances (K=2, N in {4,6,8})", c,
           now_seconds() - t0);
}

// ---- criterion 6: desk-scale clustering reproduction -------------------------

void criterion6() {
    const double t0 = now_seconds();
    Check c;
    ExperimentConfig config;
    config.experiment = "gmm";
    config.seed_count = 200;
    config.base_seed = 1;
    config.K = 4;
    config.N = 100;
    config.radii = {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
    config.cvb_anchor_subsample = 0;  // all anchors
    config.threads = 0;
    const std::vector<GmmRunRow> rows = run_gmm_rows(config);
    const GmmAggregate agg = aggregate_rows(rows);

    auto cell = [&](double radius, const std::string& algo, const std::string& metric) {
        return agg.cells.at({radius, algo}).at(metric).mean;
    };

    for (const std::string& algo : {"cvb2", "cvb3"}) {
        const double p = cell(5.0, algo, "purity");
        c.require(p >= 0.85 && p <= 0.95,
                  algo + " purity at R=5 is " + fmt(p) + ", band [0.85, 0.95]");
    }
    for (const std::string& algo : {"kmeans", "em1", "em2", "vb"}) {
        const double p = cell(5.0, algo, "purity");
        c.require(p >= 0.75 && p <= 0.85,
                  algo + " purity at R=5 is " + fmt(p) + ", band [0.75, 0.85]");
    }
    for (double radius : {3.5, 4.0, 4.5, 5.0}) {
        c.require(cell(radius, "cvb3", "purity") >= cell(radius, "vb", "purity") - 1e-12,
                  "ordering Purity(CVB3) >= Purity(VB) fails at R=" + fmt(radius));
    }
    const std::vector<std::pair<std::string, double>> iter_targets = {
        {"kmeans", 16.4}, {"em1", 16.4}, {"em2", 27.2}, {"vb", 27.4}, {"cvb2", 27.8}};
    for (const auto& [algo, target] : iter_targets) {
        double sum = 0.0;
        int n = 0;
        for (double radius : config.radii) {
            sum += cell(radius, algo, "iters");
            ++n;
        }
        const double mean = sum / n;
        c.require(std::abs(mean - target) <= 5.0,
                  algo + " mean iterations " + fmt(mean) + " outside " + fmt(target) +
                      " +/- 5");
    }
    report(6, "Fig. 8 reproduction, 200 runs/radius, all anchors", c, now_seconds() - t0);
}

// ---- criterion 7: divergence/copula property suite ----------------------------

void criterion7() {
    const double t0 = now_seconds();
    Check c;
    CounterRng rng(1009, 0);
    auto random_simplex = [&](int dim) {
        std::vector<double> v(dim);
        double s = 0.0;
        for (double& x : v) {
            x = -std::log(rng.next_uniform());
            s += x;
        }
        for (double& x : v) x /= s;
        return v;
    };

    for (int t = 0; t < 1000; ++t) {
        std::vector<double> a(3), b(3), d(3);
        for (int i = 0; i < 3; ++i) {
            a[i] = 6.0 * rng.next_uniform() - 3.0;
            b[i] = 6.0 * rng.next_uniform() - 3.0;
            d[i] = 6.0 * rng.next_uniform() - 3.0;
        }
        if (std::abs(three_point_residual(Potential::SquaredNorm, a, b, d)) >= 1e-9) {
            c.require(false, "squared-norm three-point residual >= 1e-9");
            break;
        }
        if (std::abs(three_point_residual(Potential::NegativeEntropy, random_simplex(3),
                                          random_simplex(3), random_simplex(3))) >= 1e-9) {
            c.require(false, "negative-entropy three-point residual >= 1e-9");
            break;
        }
    }

    for (double rho : {0.0, 0.3, -0.3, 0.8, -0.8}) {
        const QuadResult mi = mutual_info_copula_entropy(GaussianCopula{rho}, 256);
        const double exact = -0.5 * std::log(1.0 - rho * rho);
        c.require(std::abs(mi.value - exact) < 1e-3,
                  "mutual information off at rho = " + fmt(rho));
    }

    for (int t = 0; t < 5; ++t) {
        const BivariateGaussian f{0, 0, 0.6 + rng.next_uniform(), 0.6 + rng.next_uniform(),
                                  1.6 * rng.next_uniform() - 0.8};
        const BivariateGaussian ftilde{0, 0, 0.6 + rng.next_uniform(),
                                       0.6 + rng.next_uniform(),
                                       1.6 * rng.next_uniform() - 0.8};
        const KlDecomposition d = kl_copula_decomposition_check(f, ftilde, 256);
        c.require(std::abs(d.residual()) < 1e-3,
                  "copula KL decomposition residual " + fmt(d.residual()));
    }

    // weighted mean-square identity on random clustering weightings
    const GeneratedData gen = generate_data(4, 2.0, 40, 73);
    for (int t = 0; t < 50; ++t) {
        SoftLabelMatrix w(4, 40);
        for (int i = 0; i < 40; ++i) {
            std::vector<double> col = random_simplex(4);
            for (int k = 0; k < 4; ++k) w.at(k, i) = col[k];
        }
        const ClusterStats st = posterior_stats(gen.data, w);
        for (int k = 0; k < 4; ++k) {
            const Vec2 mu{3.0 * rng.next_normal(), 3.0 * rng.next_normal()};
            double n = 0.0, about_mu = 0.0, about_bar = 0.0;
            for (int i = 0; i < 40; ++i) {
                n += w.at(k, i);
                about_mu += w.at(k, i) * norm2(gen.data.x[i] - mu);
                about_bar += w.at(k, i) * norm2(gen.data.x[i] - st.mu_bar[k]);
            }
            const double residual =
                about_mu / n - about_bar / n - norm2(mu - st.mu_bar[k]);
            if (std::abs(residual) >= 1e-9) {
                c.require(false, "cluster mean-square identity residual " + fmt(residual));
                break;
            }
        }
    }
    report(7, "divergence/copula property suite", c, now_seconds() - t0);
}

// ---- criterion 8: augmented-mixture suite -------------------------------------

void criterion8() {
    const double t0 = now_seconds();
    Check c;
    CounterRng rng(2027, 0);

    for (int inst = 0; inst < 20; ++inst) {
        const int n = 3 + static_cast<int>(rng.next_uniform() * 5);
        std::vector<CandidateScore> scores;
        double psum = 0.0;
        for (int i = 0; i < n; ++i) {
            scores.push_back({4.0 * rng.next_uniform(), 0.05 + rng.next_uniform()});
            psum += scores.back().prior_weight;
        }
        for (CandidateScore& s : scores) s.prior_weight /= psum;

        const MixtureWeights base = optimal_weights(scores);
        std::vector<CandidateScore> shifted = scores;
        const double shift = 1400.0 * rng.next_uniform() - 700.0;
        for (CandidateScore& s : shifted) s.kl_or_neg_elbo += shift;
        const MixtureWeights moved = optimal_weights(shifted);
        for (int i = 0; i < n; ++i)
            if (std::abs(base.w[i] - moved.w[i]) > 1e-12)
                c.require(false, "weight shift invariance beyond 1e-12");

        const double best = kl_upper_bound(scores, base);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> w(n);
            double s = 0.0;
            for (double& v : w) {
                v = -std::log(rng.next_uniform());
                s += v;
            }
            for (double& v : w) v /= s;
            if (best > kl_upper_bound(scores, MixtureWeights{w}) + 1e-12) {
                c.require(false, "optimal weights beaten by a random vector");
                break;
            }
        }
    }

    // degenerate-weight reductions of the clustering schemes
    const GeneratedData gen = generate_data(4, 3.0, 30, 17);
    std::vector<CvbStructureState> states;
    for (int j = 0; j < gen.data.n(); ++j)
        states.push_back(cvb_run(gen.data, j, init_means(4), StoppingRule{0.01, 300}).state);

    std::vector<CvbStructureState> flat = states;
    for (CvbStructureState& st : flat) st.elbo = -100.0;  // equal scores
    const SchemeResult s1 = scheme_cvb1(flat);
    const SchemeResult s3flat = scheme_cvb3(flat);
    for (int k = 0; k < 4; ++k) {
        c.require(std::abs(s3flat.means[k].x - s1.means[k].x) < 1e-12 &&
                      std::abs(s3flat.means[k].y - s1.means[k].y) < 1e-12,
                  "uniform-weight CVB3 means differ from CVB1");
    }

    std::vector<CvbStructureState> spiked = states;
    spiked[11].elbo += 1000.0;  // argmax limit
    const SchemeResult s2 = scheme_cvb2(spiked);
    const SchemeResult s3spiked = scheme_cvb3(spiked);
    c.require(s3spiked.labels.assign == s2.labels.assign,
              "one-hot-weight CVB3 labels differ from CVB2");
    for (int k = 0; k < 4; ++k) {
        c.require(std::abs(s3spiked.means[k].x - s2.means[k].x) < 1e-9 &&
                      std::abs(s3spiked.means[k].y - s2.means[k].y) < 1e-9,
                  "one-hot-weight CVB3 means differ from CVB2");
    }

    // cross-module consistency: CVB3 means equal mixture_moments of the
    // per-structure estimates under q*
    const SchemeResult s3 = scheme_cvb3(states);
    std::vector<std::vector<double>> moments;
    for (const CvbStructureState& st : states) {
        const CvbEstimates est = cvb_marginal_estimates(st);
        std::vector<double> m;
        for (const Vec2& v : est.means) {
            m.push_back(v.x);
            m.push_back(v.y);
        }
        moments.push_back(std::move(m));
    }
    const std::vector<double> mixed = mixture_moments(moments, MixtureWeights{s3.weights});
    for (int k = 0; k < 4; ++k) {
        c.require(std::abs(mixed[2 * k] - s3.means[k].x) < 1e-9 &&
                      std::abs(mixed[2 * k + 1] - s3.means[k].y) < 1e-9,
                  "CVB3 means differ from mixture_moments");
    }
    report(8, "augmented-mixture suite", c, now_seconds() - t0);
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    std::printf("%d of 8 criteria failed\n", g_failures);
    return g_failures;
}
