#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cvb/divergence.hpp"

namespace cvb {

// One-dimensional CDF: analytic Gaussian, uniform on [0,1], or an
// empirical right-continuous step function with jumps 1/n.
class Cdf1D {
public:
    static Cdf1D gaussian(double mean, double sigma);
    static Cdf1D uniform01();
    static Cdf1D empirical(std::vector<double> samples);

    double cdf(double x) const;
    // inf{theta : F(theta) >= u}; quantile function.
    double quantile(double u) const;

private:
    enum class Kind { Gaussian, Uniform01, Empirical };
    Kind kind_ = Kind::Uniform01;
    double mean_ = 0.0, sigma_ = 1.0;
    std::vector<double> samples_;  // sorted
};

// Validates u in [0,1] and evaluates the quantile.
double pseudo_inverse(const Cdf1D& cdf, double u);

struct GaussianCopula {
    double rho = 0.0;  // |rho| < 1
};

// c(u) = joint bivariate normal density over the product of marginal
// normal densities, evaluated at the normal quantiles of u. Requires u
// strictly inside (0,1)^2.
double gaussian_copula_density(const GaussianCopula& cop, double u1, double u2);
double log_gaussian_copula_density(const GaussianCopula& cop, double u1, double u2);

// Frechet-Hoeffding bound check on a grid of copula CDF values;
// C[i * u2.size() + j] corresponds to (u1[i], u2[j]).
bool frechet_hoeffding_check(std::span<const double> u1, std::span<const double> u2,
                             std::span<const double> C);

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
};

// E_c[log c] over (0,1)^2, numerically; equals -0.5*log(1-rho^2) for the
// Gaussian copula. quadrature_n is the node count per axis (>= 64).
QuadResult mutual_info_copula_entropy(const GaussianCopula& cop, std::size_t quadrature_n);

// Quadrature of the copula density over (0,1)^2; the rescaling property
// makes this 1.
double copula_density_mass(const GaussianCopula& cop, std::size_t quadrature_n);

struct KlDecomposition {
    double total = 0.0;          // KL(f || ftilde), closed form
    double copula_term = 0.0;    // KL of copulas, by quadrature
    double marginal_terms[2] = {0.0, 0.0};
    bool quadrature_ok = true;
    double residual() const {
        return total - copula_term - marginal_terms[0] - marginal_terms[1];
    }
};

// Splits KL(f || ftilde) into the copula KL (with ftilde's copula read at
// marginal-rescaled arguments) plus the marginal KLs. With shared
// marginals and an independent ftilde the copula term is f's mutual
// information.
KlDecomposition kl_copula_decomposition_check(const BivariateGaussian& f,
                                              const BivariateGaussian& ftilde,
                                              std::size_t quadrature_n);

}  // namespace cvb
