#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cvb/mathutil.hpp"

namespace cvb {

// Strictly convex potentials backing the Bregman divergence. Kept as an
// enumeration so value/gradient pairs stay testable in-repo.
enum class Potential {
    SquaredNorm,      // phi(x) = ||x||^2, domain R^K
    NegativeEntropy,  // phi(x) = sum x_k log x_k, domain x_k >= 0 (0 log 0 := 0)
};

// Coordinates below this threshold are treated as exact zeros under the
// negative-entropy potential.
inline constexpr double kEntropyZero = 1e-300;

double potential_value(Potential phi, std::span<const double> x);
std::vector<double> potential_gradient(Potential phi, std::span<const double> x);

// D(a||b) = phi(a) - phi(b) - <a-b, grad phi(b)>. Throws on domain
// violations (negative coordinates under negative-entropy); a zero in b
// against a positive coordinate in a yields +infinity.
double bregman(Potential phi, std::span<const double> a, std::span<const double> b);

// D(a||b) + D(b||c) - D(a||c) - <b-a, grad phi(b) - grad phi(c)>;
// identically zero up to rounding.
double three_point_residual(Potential phi, std::span<const double> a,
                            std::span<const double> b, std::span<const double> c);

// E[phi(x)] - phi(E[x]) for the discrete distribution (points, weights).
double bregman_variance(Potential phi, const std::vector<std::vector<double>>& points,
                        std::span<const double> weights);

// True iff E[x] attains the minimum of sum_i w_i D(x_i || c) over candidates.
bool mixture_is_minimizer_check(Potential phi,
                                const std::vector<std::vector<double>>& points,
                                std::span<const double> weights,
                                const std::vector<std::vector<double>>& candidates);

struct KlResult {
    double value = 0.0;
    bool support_violation = false;  // p > 0 where q == 0; value is +infinity
};

// Extended KL over nonnegative vectors: sum p log(p/q) - sum p + sum q.
// Equals the usual KL when both sum to one.
KlResult kl_discrete(std::span<const double> p, std::span<const double> q);

struct Gaussian1D {
    double mean = 0.0;
    double sigma = 1.0;  // standard deviation, > 0
};

struct Gaussian2DIso {
    Vec2 mean;
    double sigma = 1.0;
};

struct BivariateGaussian {
    double mean1 = 0.0;
    double mean2 = 0.0;
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double rho = 0.0;  // |rho| < 1
};

double kl_gauss(const Gaussian1D& p, const Gaussian1D& q);
double kl_gauss(const Gaussian2DIso& p, const Gaussian2DIso& q);
double kl_gauss(const BivariateGaussian& p, const BivariateGaussian& q);

// True iff the weighted mean attains the minimum weighted squared error
// over the candidate set.
bool posterior_mean_mse_check(const std::vector<std::pair<double, double>>& samples,
                              std::span<const double> candidates);

}  // namespace cvb
