#include "cvb/divergence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cvb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_entropy_domain(std::span<const double> x) {
    for (double v : x)
        if (v < 0.0) throw std::domain_error("negative coordinate under negative-entropy");
}

bool is_zero(double v) { return v < kEntropyZero; }

}  // namespace

double potential_value(Potential phi, std::span<const double> x) {
    switch (phi) {
        case Potential::SquaredNorm: {
            double s = 0.0;
            for (double v : x) s += v * v;
            return s;
        }
        case Potential::NegativeEntropy: {
            check_entropy_domain(x);
            double s = 0.0;
            for (double v : x)
                if (!is_zero(v)) s += v * std::log(v);
            return s;
        }
    }
    throw std::logic_error("unknown potential");
}

std::vector<double> potential_gradient(Potential phi, std::span<const double> x) {
    std::vector<double> g(x.size());
    switch (phi) {
        case Potential::SquaredNorm:
            for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * x[i];
            return g;
        case Potential::NegativeEntropy:
            check_entropy_domain(x);
            for (std::size_t i = 0; i < x.size(); ++i)
                g[i] = is_zero(x[i]) ? -kInf : 1.0 + std::log(x[i]);
            return g;
    }
    throw std::logic_error("unknown potential");
}

double bregman(Potential phi, std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("bregman: dimension mismatch");
    if (phi == Potential::NegativeEntropy) {
        check_entropy_domain(a);
        check_entropy_domain(b);
        // sum a log(a/b) - sum a + sum b, with 0 log 0 := 0.
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (is_zero(a[i])) {
                s += b[i];
            } else if (is_zero(b[i])) {
                return kInf;
            } else {
                s += a[i] * std::log(a[i] / b[i]) - a[i] + b[i];
            }
        }
        return std::max(0.0, s);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double three_point_residual(Potential phi, std::span<const double> a,
                            std::span<const double> b, std::span<const double> c) {
    if (a.size() != b.size() || b.size() != c.size())
        throw std::invalid_argument("three_point_residual: dimension mismatch");
    const double lhs = bregman(phi, a, b) + bregman(phi, b, c) - bregman(phi, a, c);
    const std::vector<double> gb = potential_gradient(phi, b);
    const std::vector<double> gc = potential_gradient(phi, c);
    double inner = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) inner += (b[i] - a[i]) * (gb[i] - gc[i]);
    return lhs - inner;
}

double bregman_variance(Potential phi, const std::vector<std::vector<double>>& points,
                        std::span<const double> weights) {
    if (points.empty()) throw std::invalid_argument("bregman_variance: empty point set");
    if (points.size() != weights.size())
        throw std::invalid_argument("bregman_variance: points/weights size mismatch");
    const std::size_t dim = points.front().size();
    std::vector<double> mean(dim, 0.0);
    double ephi = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != dim)
            throw std::invalid_argument("bregman_variance: inconsistent dimensions");
        for (std::size_t d = 0; d < dim; ++d) mean[d] += weights[i] * points[i][d];
        ephi += weights[i] * potential_value(phi, points[i]);
    }
    return std::max(0.0, ephi - potential_value(phi, mean));
}

bool mixture_is_minimizer_check(Potential phi,
                                const std::vector<std::vector<double>>& points,
                                std::span<const double> weights,
                                const std::vector<std::vector<double>>& candidates) {
    if (points.empty() || candidates.empty()) return false;
    const std::size_t dim = points.front().size();
    std::vector<double> mean(dim, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += weights[i] * points[i][d];

    auto total = [&](std::span<const double> c) {
        double s = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i)
            s += weights[i] * bregman(phi, points[i], c);
        return s;
    };
    const double at_mean = total(mean);
    for (const auto& c : candidates)
        if (total(c) < at_mean - 1e-12) return false;
    return true;
}

KlResult kl_discrete(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_discrete: dimension mismatch");
    check_entropy_domain(p);
    check_entropy_domain(q);
    KlResult r;
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (is_zero(p[i])) {
            s += q[i];
        } else if (is_zero(q[i])) {
            r.value = kInf;
            r.support_violation = true;
            return r;
        } else {
            s += p[i] * std::log(p[i] / q[i]) - p[i] + q[i];
        }
    }
    r.value = std::max(0.0, s);
    return r;
}

double kl_gauss(const Gaussian1D& p, const Gaussian1D& q) {
    if (p.sigma <= 0.0 || q.sigma <= 0.0)
        throw std::domain_error("kl_gauss: nonpositive scale");
    const double r = p.sigma / q.sigma;
    const double dm = p.mean - q.mean;
    return std::log(q.sigma / p.sigma) + 0.5 * (r * r + dm * dm / (q.sigma * q.sigma) - 1.0);
}

double kl_gauss(const Gaussian2DIso& p, const Gaussian2DIso& q) {
    if (p.sigma <= 0.0 || q.sigma <= 0.0)
        throw std::domain_error("kl_gauss: nonpositive scale");
    const double r2 = (p.sigma * p.sigma) / (q.sigma * q.sigma);
    const double dm = norm2(p.mean - q.mean);
    return 2.0 * std::log(q.sigma / p.sigma) + r2 - 1.0 +
           0.5 * dm / (q.sigma * q.sigma);
}

double kl_gauss(const BivariateGaussian& p, const BivariateGaussian& q) {
    if (p.sigma1 <= 0.0 || p.sigma2 <= 0.0 || q.sigma1 <= 0.0 || q.sigma2 <= 0.0)
        throw std::domain_error("kl_gauss: nonpositive scale");
    if (std::abs(p.rho) >= 1.0 || std::abs(q.rho) >= 1.0)
        throw std::domain_error("kl_gauss: |rho| must be < 1");
    const double s1p = p.sigma1 * p.sigma1, s2p = p.sigma2 * p.sigma2;
    const double s1q = q.sigma1 * q.sigma1, s2q = q.sigma2 * q.sigma2;
    const double c12p = p.rho * p.sigma1 * p.sigma2;
    const double c12q = q.rho * q.sigma1 * q.sigma2;
    const double detp = s1p * s2p * (1.0 - p.rho * p.rho);
    const double detq = s1q * s2q * (1.0 - q.rho * q.rho);
    // inverse of q's covariance
    const double i11 = s2q / detq, i22 = s1q / detq, i12 = -c12q / detq;
    const double tr = i11 * s1p + 2.0 * i12 * c12p + i22 * s2p;
    const double d1 = p.mean1 - q.mean1, d2 = p.mean2 - q.mean2;
    const double quad = i11 * d1 * d1 + 2.0 * i12 * d1 * d2 + i22 * d2 * d2;
    return 0.5 * (tr + quad - 2.0 + std::log(detq / detp));
}

bool posterior_mean_mse_check(const std::vector<std::pair<double, double>>& samples,
                              std::span<const double> candidates) {
    if (samples.empty() || candidates.empty()) return false;
    double mean = 0.0;
    for (const auto& [theta, w] : samples) mean += w * theta;
    auto risk = [&](double c) {
        double s = 0.0;
        for (const auto& [theta, w] : samples) s += w * (theta - c) * (theta - c);
        return s;
    };
    const double at_mean = risk(mean);
    for (double c : candidates)
        if (risk(c) < at_mean - 1e-12) return false;
    return true;
}

}  // namespace cvb
