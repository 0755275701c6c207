#pragma once

#include <cstddef>
#include <vector>

namespace cvb {

struct QuadratureRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre nodes/weights, computed by Newton iteration on P_n.
QuadratureRule gauss_legendre(std::size_t n);

// Same rule mapped onto [a, b].
QuadratureRule gauss_legendre(std::size_t n, double a, double b);

}  // namespace cvb
