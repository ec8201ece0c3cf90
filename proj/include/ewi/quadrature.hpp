#pragma once

#include <vector>

namespace ewi {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1]. Odd n includes the node 0 exactly.
QuadratureRule gauss_legendre(int n);

/// The same rule affinely mapped onto [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

} // namespace ewi
