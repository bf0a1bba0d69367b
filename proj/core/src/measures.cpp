#include "pfpp/measures.hpp"

#include "pfpp/errors.hpp"
#include "pfpp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

namespace pfpp {

namespace {

constexpr double kYMin = 1e-300;
constexpr double kYMax = 1e300;
constexpr double kLogOverflow = 709.5;
// |log y| below which the precomputed node representation meets 1e-12
// relative accuracy; beyond it, cells fall back to adaptive quadrature.
constexpr double kFastPathLogY = 50.0;

void check_y(double y) {
    if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("y must be positive and finite");
    if (y < kYMin || y > kYMax) throw RangeError("y outside supported range [1e-300, 1e300]");
}

double log_sum_exp(const std::vector<double>& logs) {
    if (logs.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(logs.begin(), logs.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : logs) s += std::exp(v - m);
    return m + std::log(s);
}

} // namespace

// ---------------------------------------------------------------------------
// GridFunction

GridFunction::GridFunction(double half_width_, std::vector<double> values_)
    : half_width(half_width_), values(std::move(values_)) {
    if (!(half_width > 0.0)) throw ValidationError("grid half_width must be positive");
    const std::size_t n = values.size();
    if (n < 2 || (n & (n - 1)) != 0)
        throw ValidationError("grid n_points must be a power of two >= 2");
    for (double v : values)
        if (!std::isfinite(v)) throw ValidationError("grid values must be finite");
}

GridFunction GridFunction::sample(const std::function<double(double)>& f, double half_width,
                                  std::size_t n_points) {
    std::vector<double> vals(n_points);
    const double dt = 2.0 * half_width / static_cast<double>(n_points);
    for (std::size_t j = 0; j < n_points; ++j)
        vals[j] = f(-half_width + dt * static_cast<double>(j));
    return GridFunction(half_width, std::move(vals));
}

// ---------------------------------------------------------------------------
// RiskAversionMeasure

RiskAversionMeasure::RiskAversionMeasure(std::vector<Atom> atoms, std::vector<DensityCell> cells,
                                         double gamma_min, double gamma_max)
    : atoms_(std::move(atoms)), cells_(std::move(cells)), gamma_min_(gamma_min),
      gamma_max_(gamma_max) {
    if (!(gamma_min_ > 0.0) || !(gamma_min_ <= gamma_max_) || !std::isfinite(gamma_max_))
        throw ValidationError("require 0 < gamma_min <= gamma_max");
    for (const Atom& a : atoms_) {
        if (!(a.gamma > gamma_min_) || !(a.gamma < gamma_max_))
            throw ValidationError("atom gamma must lie strictly inside (gamma_min, gamma_max)");
        if (!(a.weight > 0.0) || !std::isfinite(a.weight))
            throw ValidationError("atom weight must be positive and finite");
    }
    for (const DensityCell& c : cells_) {
        if (!(c.lo < c.hi) || !(c.lo > gamma_min_) || !(c.hi < gamma_max_))
            throw ValidationError("cell must lie strictly inside (gamma_min, gamma_max)");
        if (!(c.level >= 0.0) || !std::isfinite(c.level))
            throw ValidationError("cell level must be nonnegative and finite");
    }
    mass_ = 0.0;
    for (const Atom& a : atoms_) {
        mass_ += a.weight;
        max_inv_gamma_ = std::max(max_inv_gamma_, 1.0 / a.gamma);
    }
    for (const DensityCell& c : cells_) {
        mass_ += c.level * (c.hi - c.lo);
        if (c.level > 0.0) max_inv_gamma_ = std::max(max_inv_gamma_, 1.0 / c.lo);
    }
    if (!(mass_ > 0.0) || !std::isfinite(mass_))
        throw ValidationError("total mass must be positive and finite");

    // Flatten into power nodes. Cells are split so a fixed Gauss-Legendre
    // order reaches 1e-12 relative accuracy for |log y| <= kFastPathLogY.
    for (const Atom& a : atoms_) {
        node_inv_gamma_.push_back(1.0 / a.gamma);
        node_weight_.push_back(a.weight);
    }
    for (const DensityCell& c : cells_) {
        if (c.level == 0.0) continue;
        const double width = c.hi - c.lo;
        const double target = 0.007 * c.lo * c.lo;
        const std::size_t n_sub =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(width / target)));
        const double h = width / static_cast<double>(n_sub);
        const std::size_t order = (h <= 1e-3 * c.lo * c.lo) ? 3 : 7;
        const QuadratureRule& rule = gauss_legendre(order);
        for (std::size_t k = 0; k < n_sub; ++k) {
            const double lo = c.lo + h * static_cast<double>(k);
            const double mid = lo + 0.5 * h;
            for (std::size_t q = 0; q < order; ++q) {
                node_inv_gamma_.push_back(1.0 / (mid + 0.5 * h * rule.nodes[q]));
                node_weight_.push_back(c.level * 0.5 * h * rule.weights[q]);
            }
        }
    }
}

namespace {

double eval_slow(const RiskAversionMeasure& m, double s, bool derivative) {
    // log-space evaluation for extreme |log y|
    std::vector<double> logs;
    for (const Atom& a : m.atoms()) {
        double lt = std::log(a.weight) - s / a.gamma;
        if (derivative) lt += -std::log(a.gamma) - s;
        logs.push_back(lt);
    }
    for (const DensityCell& c : m.cells()) {
        if (c.level == 0.0) continue;
        auto logf = [&](double g) {
            double lt = -s / g;
            if (derivative) lt += -std::log(g) - s;
            return lt;
        };
        const double peak = std::max(logf(c.lo), logf(c.hi));
        const double val = integrate_adaptive(
            [&](double g) { return std::exp(logf(g) - peak); }, c.lo, c.hi, 1e-12);
        if (val > 0.0) logs.push_back(std::log(c.level) + peak + std::log(val));
    }
    const double log_total = log_sum_exp(logs);
    if (log_total > kLogOverflow) throw RangeError("CMIM value exceeds double range");
    return std::exp(log_total);
}

} // namespace

double cmim_eval(const RiskAversionMeasure& m, double y) {
    check_y(y);
    const double s = std::log(y);
    if (std::abs(s) <= kFastPathLogY && std::abs(s) * m.max_inv_gamma() < 700.0) {
        const auto& ig = m.node_inv_gamma();
        const auto& w = m.node_weight();
        double total = 0.0;
        for (std::size_t k = 0; k < ig.size(); ++k) total += w[k] * std::exp(-s * ig[k]);
        return total;
    }
    return eval_slow(m, s, false);
}

double cmim_derivative(const RiskAversionMeasure& m, double y) {
    check_y(y);
    const double s = std::log(y);
    if (std::abs(s) <= kFastPathLogY && std::abs(s) * m.max_inv_gamma() < 700.0) {
        const auto& ig = m.node_inv_gamma();
        const auto& w = m.node_weight();
        double total = 0.0;
        for (std::size_t k = 0; k < ig.size(); ++k)
            total += w[k] * ig[k] * std::exp(-s * ig[k]);
        return -total / y;
    }
    return -eval_slow(m, s, true);
}

std::pair<double, double> sandwich_bounds(const RiskAversionMeasure& m, double y) {
    check_y(y);
    const double s = std::log(y);
    const double a = m.total_mass() * std::exp(-s / m.gamma_min());
    const double b = m.total_mass() * std::exp(-s / m.gamma_max());
    return {std::min(a, b), std::max(a, b)};
}

// ---------------------------------------------------------------------------
// InverseMarginal

namespace {

// Fritsch-Carlson monotone cubic slopes (data assumed non-increasing).
std::vector<double> pchip_slopes(const std::vector<double>& t, const std::vector<double>& j) {
    const std::size_t n = t.size();
    std::vector<double> d(n - 1), m(n);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (j[i + 1] - j[i]) / (t[i + 1] - t[i]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            m[i] = 0.0;
        } else {
            const double h0 = t[i] - t[i - 1];
            const double h1 = t[i + 1] - t[i];
            const double w1 = 2.0 * h1 + h0;
            const double w2 = h1 + 2.0 * h0;
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0) return 0.0;
        if (std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return s;
    };
    m[0] = (n > 2) ? end_slope(t[1] - t[0], t[2] - t[1], d[0], d[1]) : d[0];
    m[n - 1] = (n > 2) ? end_slope(t[n - 1] - t[n - 2], t[n - 2] - t[n - 3], d[n - 2], d[n - 3])
                       : d[n - 2];
    return m;
}

} // namespace

struct InverseMarginal::Impl {
    std::variant<RiskAversionMeasure, GridData> backing;

    explicit Impl(RiskAversionMeasure m) : backing(std::move(m)) {}
    explicit Impl(GridData g) : backing(std::move(g)) {}
};

InverseMarginal InverseMarginal::from_measure(RiskAversionMeasure m) {
    return InverseMarginal(std::make_shared<const Impl>(std::move(m)));
}

InverseMarginal InverseMarginal::from_grid(std::vector<double> t_samples,
                                           std::vector<double> j_samples, double gamma1,
                                           double gamma2) {
    if (t_samples.size() != j_samples.size() || t_samples.size() < 4)
        throw ValidationError("grid backing needs >= 4 matching samples");
    if (!(gamma1 > 0.0) || !(gamma1 <= gamma2))
        throw ValidationError("require 0 < gamma1 <= gamma2");
    for (std::size_t i = 0; i < j_samples.size(); ++i) {
        if (!std::isfinite(j_samples[i]) || !(j_samples[i] > 0.0))
            throw ValidationError("grid-backed inverse marginal samples must be positive");
        if (i > 0 && !(t_samples[i] > t_samples[i - 1]))
            throw ValidationError("t samples must be increasing");
    }
    // Clamp sub-tolerance wiggles so the interpolant is non-increasing.
    for (std::size_t i = 1; i < j_samples.size(); ++i)
        j_samples[i] = std::min(j_samples[i], j_samples[i - 1]);
    GridData g;
    g.slope = pchip_slopes(t_samples, j_samples);
    g.t = std::move(t_samples);
    g.j = std::move(j_samples);
    g.gamma1 = gamma1;
    g.gamma2 = gamma2;
    return InverseMarginal(std::make_shared<const Impl>(std::move(g)));
}

bool InverseMarginal::is_cmim() const {
    return std::holds_alternative<RiskAversionMeasure>(impl_->backing);
}

const RiskAversionMeasure& InverseMarginal::measure() const {
    if (!is_cmim()) throw UnsupportedRouteError("inverse marginal is grid-backed");
    return std::get<RiskAversionMeasure>(impl_->backing);
}

const InverseMarginal::GridData& InverseMarginal::grid() const {
    if (is_cmim()) throw UnsupportedRouteError("inverse marginal is measure-backed");
    return std::get<GridData>(impl_->backing);
}

namespace {

struct HermiteEval {
    double value;
    double deriv; // d/dt
};

HermiteEval hermite_eval(const InverseMarginal::GridData& g, double t) {
    const std::size_t n = g.t.size();
    const auto it = std::upper_bound(g.t.begin(), g.t.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(g.t.begin(), it));
    i = std::min(std::max<std::size_t>(i, 1), n - 1) - 1;
    const double h = g.t[i + 1] - g.t[i];
    const double u = (t - g.t[i]) / h;
    const double u2 = u * u;
    const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    const double h10 = u * (1.0 - u) * (1.0 - u);
    const double h01 = u2 * (3.0 - 2.0 * u);
    const double h11 = u2 * (u - 1.0);
    HermiteEval out;
    out.value = h00 * g.j[i] + h * h10 * g.slope[i] + h01 * g.j[i + 1] + h * h11 * g.slope[i + 1];
    const double dh00 = 6.0 * u * (u - 1.0);
    const double dh10 = (1.0 - u) * (1.0 - 3.0 * u);
    const double dh01 = -dh00;
    const double dh11 = u * (3.0 * u - 2.0);
    out.deriv = (dh00 * g.j[i] + dh01 * g.j[i + 1]) / h + dh10 * g.slope[i] + dh11 * g.slope[i + 1];
    return out;
}

double grid_value(const InverseMarginal::GridData& g, double t) {
    if (t < g.t.front()) return g.j.front() * std::exp(-(t - g.t.front()) / g.gamma1);
    if (t > g.t.back()) return g.j.back() * std::exp(-(t - g.t.back()) / g.gamma2);
    return hermite_eval(g, t).value;
}

double grid_dvalue_dt(const InverseMarginal::GridData& g, double t) {
    if (t < g.t.front()) return -grid_value(g, t) / g.gamma1;
    if (t > g.t.back()) return -grid_value(g, t) / g.gamma2;
    return hermite_eval(g, t).deriv;
}

} // namespace

double InverseMarginal::value(double y) const {
    if (is_cmim()) return cmim_eval(std::get<RiskAversionMeasure>(impl_->backing), y);
    check_y(y);
    return grid_value(std::get<GridData>(impl_->backing), std::log(y));
}

double InverseMarginal::derivative(double y) const {
    if (is_cmim()) return cmim_derivative(std::get<RiskAversionMeasure>(impl_->backing), y);
    check_y(y);
    return grid_dvalue_dt(std::get<GridData>(impl_->backing), std::log(y)) / y;
}

double InverseMarginal::invert(double x) const {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("x must be positive and finite");
    // Geometric bracket expansion from y = 1 (I is decreasing).
    double y_lo = 1.0, y_hi = 1.0;
    double v = value(1.0);
    if (v >= x) {
        while (value(y_hi) > x) {
            y_hi *= 8.0;
            if (y_hi > kYMax) throw RangeError("inversion bracket exceeds numeric range");
        }
    } else {
        while (value(y_lo) < x) {
            y_lo /= 8.0;
            if (y_lo < kYMin) throw RangeError("inversion bracket exceeds numeric range");
        }
    }
    // Safeguarded Newton in u = log y; I(y_lo) >= x >= I(y_hi).
    double u_lo = std::log(y_lo), u_hi = std::log(y_hi);
    double u = 0.5 * (u_lo + u_hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double y = std::exp(u);
        const double f = value(y) - x;
        if (std::abs(f) <= 1e-12 * x) return y;
        if (f > 0.0)
            u_lo = u;
        else
            u_hi = u;
        const double df_du = derivative(y) * y;
        double u_next = (df_du < 0.0) ? u - f / df_du : u_lo;
        if (!(u_next > u_lo) || !(u_next < u_hi)) u_next = 0.5 * (u_lo + u_hi);
        if (u_hi - u_lo < 1e-15) return std::exp(0.5 * (u_lo + u_hi));
        u = u_next;
    }
    return std::exp(u);
}

} // namespace pfpp
