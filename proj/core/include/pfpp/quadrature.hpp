#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace pfpp {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1].
const QuadratureRule& gauss_legendre(std::size_t n);

/// Gauss-Hermite rule for weight e^{-x^2} on (-inf, inf).
/// sum_i w_i f(x_i) ~ int f(x) e^{-x^2} dx; sum_i w_i = sqrt(pi).
const QuadratureRule& gauss_hermite(std::size_t n);

/// Adaptive Gauss-Legendre integration of f over [a, b] to relative
/// tolerance rel_tol (with a small absolute floor for near-zero integrals).
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-12);

} // namespace pfpp
