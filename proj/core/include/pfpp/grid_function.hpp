#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace pfpp {

/// Uniform samples of a real function on [-L, L), t_j = -L + j * 2L/n.
/// n must be a power of two (FFT requirement downstream).
struct GridFunction {
    double half_width = 0.0;
    std::vector<double> values;

    GridFunction() = default;
    GridFunction(double half_width_, std::vector<double> values_);

    static GridFunction sample(const std::function<double(double)>& f, double half_width,
                               std::size_t n_points);

    std::size_t size() const { return values.size(); }
    double dt() const { return 2.0 * half_width / static_cast<double>(values.size()); }
    double t_at(std::size_t j) const { return -half_width + dt() * static_cast<double>(j); }
};

} // namespace pfpp
