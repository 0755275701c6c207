#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cvb/augment.hpp"
#include "cvb/rng.hpp"

using namespace cvb;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<CandidateScore> uniform_prior(std::vector<double> kls) {
    std::vector<CandidateScore> scores;
    const double p = 1.0 / static_cast<double>(kls.size());
    for (double kl : kls) scores.push_back({kl, p});
    return scores;
}

}  // namespace

TEST_CASE("optimal weights") {
    SUBCASE("equal KLs give uniform weights") {
        const MixtureWeights w = optimal_weights(uniform_prior({0.7, 0.7, 0.7}));
        for (double v : w.w) CHECK(v == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("KLs {0, ln 2} give weights {2/3, 1/3}") {
        const MixtureWeights w = optimal_weights(uniform_prior({0.0, std::log(2.0)}));
        CHECK(w.w[0] == doctest::Approx(2.0 / 3.0));
        CHECK(w.w[1] == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("infinite KL gets weight exactly zero") {
        const MixtureWeights w = optimal_weights(uniform_prior({0.3, kInf}));
        CHECK(w.w[0] == doctest::Approx(1.0));
        CHECK(w.w[1] == 0.0);
    }
    SUBCASE("all infinite is rejected") {
        CHECK_THROWS_AS(optimal_weights(uniform_prior({kInf, kInf})),
                        std::invalid_argument);
    }
    SUBCASE("huge score offsets do not overflow") {
        const MixtureWeights w = optimal_weights(uniform_prior({-700.0, -700.0 + std::log(3.0)}));
        CHECK(w.w[0] == doctest::Approx(0.75));
        CHECK(w.w[1] == doctest::Approx(0.25));
    }
}

TEST_CASE("shift invariance of the optimal weights") {
    CounterRng rng(31, 0);
    for (int t = 0; t < 100; ++t) {
        std::vector<CandidateScore> scores;
        const int n = 2 + static_cast<int>(rng.next_uniform() * 6);
        double psum = 0.0;
        for (int i = 0; i < n; ++i) {
            scores.push_back({5.0 * rng.next_uniform(), 0.1 + rng.next_uniform()});
            psum += scores.back().prior_weight;
        }
        for (CandidateScore& s : scores) s.prior_weight /= psum;
        const MixtureWeights base = optimal_weights(scores);
        std::vector<CandidateScore> shifted = scores;
        const double shift = 1400.0 * rng.next_uniform() - 700.0;
        for (CandidateScore& s : shifted) s.kl_or_neg_elbo += shift;
        const MixtureWeights moved = optimal_weights(shifted);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(base.w[i] - moved.w[i]) < 1e-12);
    }
}

TEST_CASE("kl upper bound") {
    SUBCASE("single candidate returns its KL") {
        const std::vector<CandidateScore> one = {{0.42, 1.0}};
        CHECK(kl_upper_bound(one, optimal_weights(one)) == doctest::Approx(0.42));
    }
    SUBCASE("optimal weights reach -log sum p exp(-KL)") {
        const std::vector<CandidateScore> scores = uniform_prior({0.1, 0.9, 2.5});
        double z = 0.0;
        for (const CandidateScore& s : scores)
            z += s.prior_weight * std::exp(-s.kl_or_neg_elbo);
        CHECK(kl_upper_bound(scores, optimal_weights(scores)) ==
              doctest::Approx(-std::log(z)).epsilon(1e-12));
    }
    SUBCASE("one-hot weights recover the argmin-candidate bound") {
        const std::vector<CandidateScore> scores = uniform_prior({0.8, 0.2, 1.4});
        MixtureWeights onehot{{0.0, 1.0, 0.0}};
        // sum w KL + sum w log(w/p) = KL_1 + log(1/p_1)
        CHECK(kl_upper_bound(scores, onehot) ==
              doctest::Approx(0.2 + std::log(3.0)).epsilon(1e-12));
    }
}

TEST_CASE("optimal weights beat random weight vectors") {
    CounterRng rng(37, 0);
    for (int inst = 0; inst < 10; ++inst) {
        std::vector<CandidateScore> scores;
        const int n = 3 + static_cast<int>(rng.next_uniform() * 4);
        for (int i = 0; i < n; ++i) scores.push_back({4.0 * rng.next_uniform(), 1.0 / n});
        const double best = kl_upper_bound(scores, optimal_weights(scores));
        for (int t = 0; t < 100; ++t) {
            std::vector<double> w(n);
            double s = 0.0;
            for (double& v : w) {
                v = -std::log(rng.next_uniform());
                s += v;
            }
            for (double& v : w) v /= s;
            CHECK(best <= kl_upper_bound(scores, MixtureWeights{w}) + 1e-12);
        }
    }
}

TEST_CASE("mixture moments") {
    const MixtureWeights onehot{{1.0, 0.0}};
    CHECK(mixture_moments({{3.0, -1.0}, {8.0, 8.0}}, onehot) ==
          std::vector<double>{3.0, -1.0});
    const MixtureWeights half{{0.5, 0.5}};
    CHECK(mixture_moments({{0.0}, {2.0}}, half) == std::vector<double>{1.0});
    CHECK_THROWS_AS(mixture_moments({{0.0}}, half), std::invalid_argument);
}
