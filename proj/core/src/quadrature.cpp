#include "pfpp/quadrature.hpp"

#include "pfpp/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace pfpp {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

QuadratureRule make_gauss_legendre(std::size_t n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
        // Chebyshev initial guess, then Newton on P_n.
        double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * static_cast<double>(j) + 1.0) * x * p1 - static_cast<double>(j) * p2) /
                     (static_cast<double>(j) + 1.0);
            }
            pp = static_cast<double>(n) * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

QuadratureRule make_gauss_hermite(std::size_t n) {
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pim4 = 0.7511255444649424828587030047762276930510; // pi^{-1/4}
    const std::size_t m = (n + 1) / 2;
    double x = 0.0, pp = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (i == 0) {
            x = std::sqrt(2.0 * static_cast<double>(n) + 1.0) -
                1.85575 * std::pow(2.0 * static_cast<double>(n) + 1.0, -0.16667);
        } else if (i == 1) {
            x -= 1.14 * std::pow(static_cast<double>(n), 0.426) / x;
        } else if (i == 2) {
            x = 1.86 * x - 0.86 * rule.nodes[n - 1];
        } else if (i == 3) {
            x = 1.91 * x - 0.91 * rule.nodes[n - 2];
        } else {
            x = 2.0 * x - rule.nodes[n + 1 - i];
        }
        for (int iter = 0; iter < 200; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = x * std::sqrt(2.0 / (static_cast<double>(j) + 1.0)) * p2 -
                     std::sqrt(static_cast<double>(j) / (static_cast<double>(j) + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * static_cast<double>(n)) * p2;
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[n - 1 - i] = x;
        rule.nodes[i] = -x;
        const double w = 2.0 / (pp * pp);
        rule.weights[n - 1 - i] = w;
        rule.weights[i] = w;
    }
    return rule;
}

double adaptive_step(const std::function<double(double)>& f, double a, double b, double whole,
                     const QuadratureRule& rule, double rel_tol, double abs_floor, int depth) {
    const double mid = 0.5 * (a + b);
    auto apply = [&](double lo, double hi) {
        const double h = 0.5 * (hi - lo);
        const double c = 0.5 * (lo + hi);
        double s = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            s += rule.weights[i] * f(c + h * rule.nodes[i]);
        return s * h;
    };
    const double left = apply(a, mid);
    const double right = apply(mid, b);
    const double sum = left + right;
    if (depth > 48) throw NumericalError("adaptive quadrature failed to converge");
    if (std::abs(sum - whole) <= rel_tol * std::abs(sum) + abs_floor) return sum;
    return adaptive_step(f, a, mid, left, rule, rel_tol, abs_floor * 0.5, depth + 1) +
           adaptive_step(f, mid, b, right, rule, rel_tol, abs_floor * 0.5, depth + 1);
}

} // namespace

const QuadratureRule& gauss_legendre(std::size_t n) {
    static std::mutex mtx;
    static std::map<std::size_t, QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gauss_legendre(n)).first;
    return it->second;
}

const QuadratureRule& gauss_hermite(std::size_t n) {
    static std::mutex mtx;
    static std::map<std::size_t, QuadratureRule> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_gauss_hermite(n)).first;
    return it->second;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    const QuadratureRule& rule = gauss_legendre(7);
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    double whole = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        whole += rule.weights[i] * f(c + h * rule.nodes[i]);
    whole *= h;
    const double abs_floor = 1e-300;
    return sign * adaptive_step(f, a, b, whole, rule, rel_tol, abs_floor, 0);
}

} // namespace pfpp
