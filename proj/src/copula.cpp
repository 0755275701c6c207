#include "cvb/copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cvb/quadrature.hpp"

namespace cvb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadBox = 8.0;  // probit-space half-width; tail mass ~1e-15

// log c at normal scores z, i.e. log phi2(z; rho) - log phi(z1) - log phi(z2).
double log_c_z(double rho, double z1, double z2) {
    const double r2 = rho * rho;
    return -0.5 * std::log1p(-r2) +
           (2.0 * rho * z1 * z2 - r2 * (z1 * z1 + z2 * z2)) / (2.0 * (1.0 - r2));
}

void check_rho(double rho) {
    if (!(std::abs(rho) < 1.0))
        throw std::domain_error("gaussian copula: |rho| must be < 1");
}

}  // namespace

Cdf1D Cdf1D::gaussian(double mean, double sigma) {
    if (sigma <= 0.0) throw std::domain_error("Cdf1D::gaussian: sigma must be positive");
    Cdf1D f;
    f.kind_ = Kind::Gaussian;
    f.mean_ = mean;
    f.sigma_ = sigma;
    return f;
}

Cdf1D Cdf1D::uniform01() {
    Cdf1D f;
    f.kind_ = Kind::Uniform01;
    return f;
}

Cdf1D Cdf1D::empirical(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("Cdf1D::empirical: no samples");
    Cdf1D f;
    f.kind_ = Kind::Empirical;
    f.samples_ = std::move(samples);
    std::sort(f.samples_.begin(), f.samples_.end());
    return f;
}

double Cdf1D::cdf(double x) const {
    switch (kind_) {
        case Kind::Gaussian:
            return normal_cdf((x - mean_) / sigma_);
        case Kind::Uniform01:
            return std::clamp(x, 0.0, 1.0);
        case Kind::Empirical: {
            const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
            return static_cast<double>(it - samples_.begin()) /
                   static_cast<double>(samples_.size());
        }
    }
    return 0.0;
}

double Cdf1D::quantile(double u) const {
    switch (kind_) {
        case Kind::Gaussian:
            return mean_ + sigma_ * normal_quantile(u);
        case Kind::Uniform01:
            return u;
        case Kind::Empirical: {
            if (u == 0.0) return -kInf;  // F >= 0 everywhere
            const std::size_t n = samples_.size();
            const std::size_t idx =
                static_cast<std::size_t>(std::ceil(u * static_cast<double>(n)));
            return samples_[std::min(idx, n) - 1];
        }
    }
    return 0.0;
}

double pseudo_inverse(const Cdf1D& cdf, double u) {
    if (!(u >= 0.0 && u <= 1.0))
        throw std::domain_error("pseudo_inverse: u outside [0,1]");
    return cdf.quantile(u);
}

double log_gaussian_copula_density(const GaussianCopula& cop, double u1, double u2) {
    check_rho(cop.rho);
    if (!(u1 > 0.0 && u1 < 1.0 && u2 > 0.0 && u2 < 1.0))
        throw std::domain_error("gaussian_copula_density: u must be interior to (0,1)^2");
    return log_c_z(cop.rho, normal_quantile(u1), normal_quantile(u2));
}

double gaussian_copula_density(const GaussianCopula& cop, double u1, double u2) {
    return std::exp(log_gaussian_copula_density(cop, u1, u2));
}

bool frechet_hoeffding_check(std::span<const double> u1, std::span<const double> u2,
                             std::span<const double> C) {
    if (C.size() != u1.size() * u2.size())
        throw std::invalid_argument("frechet_hoeffding_check: grid size mismatch");
    constexpr double tol = 1e-12;
    for (std::size_t i = 0; i < u1.size(); ++i) {
        for (std::size_t j = 0; j < u2.size(); ++j) {
            const double c = C[i * u2.size() + j];
            const double lo = std::max(0.0, u1[i] + u2[j] - 1.0);
            const double hi = std::min(u1[i], u2[j]);
            if (c < lo - tol || c > hi + tol) return false;
        }
    }
    return true;
}

namespace {

// Integrates g against the bivariate normal with correlation rho over the
// probit-space box [-kQuadBox, kQuadBox]^2 using an n-per-axis
// Gauss-Legendre rule. This is the boundary-regularizing change of
// variables u = Phi(z): copula integrals become smooth Gaussian ones.
template <typename G>
double probit_integral(double rho, std::size_t n, G&& g) {
    const QuadratureRule rule = gauss_legendre(n, -kQuadBox, kQuadBox);
    const double r2 = rho * rho;
    const double lognorm = -std::log(2.0 * M_PI) - 0.5 * std::log1p(-r2);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z1 = rule.nodes[i];
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double z2 = rule.nodes[j];
            const double logpdf =
                lognorm - (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / (2.0 * (1.0 - r2));
            row += rule.weights[j] * std::exp(logpdf) * g(z1, z2);
        }
        total += rule.weights[i] * row;
    }
    return total;
}

}  // namespace

QuadResult mutual_info_copula_entropy(const GaussianCopula& cop, std::size_t quadrature_n) {
    check_rho(cop.rho);
    if (quadrature_n < 64)
        throw std::invalid_argument("mutual_info_copula_entropy: quadrature_n must be >= 64");
    auto integrand = [&](double z1, double z2) { return log_c_z(cop.rho, z1, z2); };
    QuadResult r;
    r.value = probit_integral(cop.rho, quadrature_n, integrand);
    const double coarse = probit_integral(cop.rho, quadrature_n / 2, integrand);
    r.error_estimate = std::abs(r.value - coarse);
    r.converged = r.error_estimate < 1e-6;
    return r;
}

double copula_density_mass(const GaussianCopula& cop, std::size_t quadrature_n) {
    check_rho(cop.rho);
    return probit_integral(cop.rho, quadrature_n, [](double, double) { return 1.0; });
}

KlDecomposition kl_copula_decomposition_check(const BivariateGaussian& f,
                                              const BivariateGaussian& ftilde,
                                              std::size_t quadrature_n) {
    KlDecomposition out;
    out.total = kl_gauss(f, ftilde);
    out.marginal_terms[0] =
        kl_gauss(Gaussian1D{f.mean1, f.sigma1}, Gaussian1D{ftilde.mean1, ftilde.sigma1});
    out.marginal_terms[1] =
        kl_gauss(Gaussian1D{f.mean2, f.sigma2}, Gaussian1D{ftilde.mean2, ftilde.sigma2});

    // E_f log[c(F(theta)) / ctilde(Ftilde(theta))], written in f's normal
    // scores z; the second argument rescales through ftilde's marginals:
    // w_k = (mu_k - mutilde_k + sigma_k z_k) / sigmatilde_k. When ftilde
    // shares f's marginals and is independent this is the mutual
    // information of f.
    auto integrand = [&](double z1, double z2) {
        const double w1 = (f.mean1 - ftilde.mean1 + f.sigma1 * z1) / ftilde.sigma1;
        const double w2 = (f.mean2 - ftilde.mean2 + f.sigma2 * z2) / ftilde.sigma2;
        return log_c_z(f.rho, z1, z2) - log_c_z(ftilde.rho, w1, w2);
    };
    out.copula_term = probit_integral(f.rho, quadrature_n, integrand);
    const double coarse = probit_integral(f.rho, quadrature_n / 2, integrand);
    out.quadrature_ok = std::abs(out.copula_term - coarse) < 1e-6;
    return out;
}

}  // namespace cvb
