#pragma once

#include "pfpp/grid_function.hpp"

#include <memory>
#include <optional>
#include <utility>
#include <vector>

namespace pfpp {

struct Atom {
    double gamma = 0.0;
    double weight = 0.0;
};

/// Piecewise-constant density piece: density == level on [lo, hi).
struct DensityCell {
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.0;
};

/// Finite risk-aversion measure m on (gamma_min, gamma_max): point masses plus
/// a piecewise-constant density. Defines the completely monotonic inverse
/// marginal I(y) = int y^{-1/gamma} dm(gamma). Immutable after construction.
class RiskAversionMeasure {
  public:
    RiskAversionMeasure(std::vector<Atom> atoms, std::vector<DensityCell> cells, double gamma_min,
                        double gamma_max);

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<DensityCell>& cells() const { return cells_; }
    double gamma_min() const { return gamma_min_; }
    double gamma_max() const { return gamma_max_; }
    double total_mass() const { return mass_; }

    /// Flattened quadrature representation: I(y) = sum_k node_weight[k] *
    /// y^{-node_inv_gamma[k]}, exact for atoms, Gauss-Legendre nodes for cells.
    const std::vector<double>& node_inv_gamma() const { return node_inv_gamma_; }
    const std::vector<double>& node_weight() const { return node_weight_; }
    double max_inv_gamma() const { return max_inv_gamma_; }

  private:
    std::vector<Atom> atoms_;
    std::vector<DensityCell> cells_;
    double gamma_min_;
    double gamma_max_;
    double mass_;
    double max_inv_gamma_ = 0.0;
    std::vector<double> node_inv_gamma_;
    std::vector<double> node_weight_;
};

/// I(y) = int y^{-1/gamma} dm(gamma). Domain policy: y must lie in
/// [1e-300, 1e300]; values that would overflow a double raise RangeError.
double cmim_eval(const RiskAversionMeasure& m, double y);

/// I'(y) = -(1/gamma) int y^{-(1+gamma)/gamma} dm(gamma); strictly negative.
double cmim_derivative(const RiskAversionMeasure& m, double y);

/// Mass-scaled power bounds containing I(y): mass * y^{-1/gamma} over the
/// ambient exponents, ordered so that lo <= I(y) <= hi.
std::pair<double, double> sandwich_bounds(const RiskAversionMeasure& m, double y);

/// Strictly decreasing positive map on (0, inf) with I(0+) = +inf and
/// I(+inf) = 0. Backed either by a risk-aversion measure (closed form) or by
/// log-coordinate grid samples with power-law tails (deconvolution output).
/// Cheap to copy; immutable.
class InverseMarginal {
  public:
    static InverseMarginal from_measure(RiskAversionMeasure m);

    /// Grid backing: samples of J(t) = I(e^t) on a uniform grid over
    /// [-trusted_half_width, trusted_half_width]; beyond the grid, power
    /// tails y^{-1/gamma1} (left) and y^{-1/gamma2} (right).
    static InverseMarginal from_grid(std::vector<double> t_samples, std::vector<double> j_samples,
                                     double gamma1, double gamma2);

    double value(double y) const;
    double derivative(double y) const;

    /// Solve I(y) = x by bracketed Newton; |I(y)-x| <= 1e-12 x.
    double invert(double x) const;

    bool is_cmim() const;
    const RiskAversionMeasure& measure() const; // throws UnsupportedRouteError if grid-backed

    struct GridData {
        std::vector<double> t;
        std::vector<double> j;
        std::vector<double> slope; // monotone-cubic knot derivatives
        double gamma1 = 0.0;
        double gamma2 = 0.0;
    };
    const GridData& grid() const; // throws UnsupportedRouteError if measure-backed

  private:
    struct Impl;
    explicit InverseMarginal(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

} // namespace pfpp
