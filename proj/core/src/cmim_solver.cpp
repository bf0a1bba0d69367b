#include "pfpp/cmim_solver.hpp"

#include "pfpp/errors.hpp"
#include "pfpp/quadrature.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

namespace pfpp {

namespace {

constexpr std::size_t kHermiteOrder = 64;

double reweight_factor(const KernelLaw& law, double gamma) {
    return 1.0 / moment(law, 1.0 - 1.0 / gamma);
}

void refine_cell(const KernelLaw& law, const DensityCell& cell, double tol, double max_width,
                 std::vector<DensityCell>& out) {
    struct Frame {
        double lo, hi;
    };
    std::vector<Frame> stack{{cell.lo, cell.hi}};
    const QuadratureRule& rule = gauss_legendre(5);
    auto f = [&](double g) { return reweight_factor(law, g); };
    while (!stack.empty()) {
        const Frame fr = stack.back();
        stack.pop_back();
        const double width = fr.hi - fr.lo;
        const double mid = 0.5 * (fr.lo + fr.hi);
        const double fm = f(mid);
        const double curvature = std::abs(f(fr.lo) + f(fr.hi) - 2.0 * fm);
        if ((width > max_width || curvature > 2.0 * tol * fm) && width > 1e-7) {
            stack.push_back({mid, fr.hi});
            stack.push_back({fr.lo, mid});
            continue;
        }
        // Mass-preserving level: cell average of the factor.
        double avg = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
            avg += rule.weights[q] * f(mid + 0.5 * width * rule.nodes[q]);
        avg *= 0.5;
        out.push_back({fr.lo, fr.hi, cell.level * avg});
    }
}

} // namespace

std::string ResidualReport::to_csv() const {
    std::string out = "y,lhs,rhs,rel_err\n";
    char buf[160];
    for (std::size_t i = 0; i < y.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", y[i], lhs[i], rhs[i],
                      rel_err[i]);
        out += buf;
    }
    return out;
}

std::vector<double> default_y_grid(std::size_t n, double lo, double hi) {
    std::vector<double> grid(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        grid[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                                     static_cast<double>(n - 1));
    return grid;
}

RiskAversionMeasure solve_period(const RiskAversionMeasure& m_prev, const KernelLaw& law,
                                 const CmimSolveOptions& options) {
    if (!cmim_integrability_check(law, m_prev.gamma_min(), m_prev.gamma_max()))
        throw PreconditionError("kernel law fails CMIM integrability on the ambient range");

    std::vector<Atom> atoms;
    atoms.reserve(m_prev.atoms().size());
    for (const Atom& a : m_prev.atoms())
        atoms.push_back({a.gamma, a.weight * reweight_factor(law, a.gamma)});

    std::vector<DensityCell> cells;
    for (const DensityCell& c : m_prev.cells()) {
        if (c.level == 0.0) {
            cells.push_back(c);
            continue;
        }
        refine_cell(law, c, options.cell_refine_tol, options.max_cell_width, cells);
    }
    return RiskAversionMeasure(std::move(atoms), std::move(cells), m_prev.gamma_min(),
                               m_prev.gamma_max());
}

namespace {

// Representation-level residual: with I(y) = sum_k w_k y^{-b_k} the left side
// collapses exactly to sum_k w_k M(1 - b_k) y^{-b_k}, where M is the kernel
// moment evaluated by exact sums (discrete) or Gauss-Hermite (lognormal).
std::vector<double> collapsed_weights(const RiskAversionMeasure& m, const KernelLaw& law) {
    const auto& ig = m.node_inv_gamma();
    const auto& w = m.node_weight();
    std::vector<double> out(w.size());
    if (law.is_discrete()) {
        const auto& atoms = law.discrete().atoms;
        std::vector<double> logs(atoms.size());
        for (std::size_t i = 0; i < atoms.size(); ++i) logs[i] = std::log(atoms[i].rho);
        for (std::size_t k = 0; k < w.size(); ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < atoms.size(); ++i)
                s += atoms[i].prob * std::exp((1.0 - ig[k]) * logs[i]);
            out[k] = w[k] * s;
        }
    } else {
        const double s2 = law.lognormal().sigma2;
        const double sd = std::sqrt(s2);
        const QuadratureRule& gh = gauss_hermite(kHermiteOrder);
        const double inv_sqrt_pi = 0.5641895835477562869480794515607726;
        std::vector<double> log_rho(gh.nodes.size());
        for (std::size_t i = 0; i < gh.nodes.size(); ++i)
            log_rho[i] = -0.5 * s2 + sd * 1.4142135623730950488016887242097 * gh.nodes[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < gh.nodes.size(); ++i)
                s += gh.weights[i] * std::exp((1.0 - ig[k]) * log_rho[i]);
            out[k] = w[k] * s * inv_sqrt_pi;
        }
    }
    return out;
}

} // namespace

ResidualReport period_residual(const RiskAversionMeasure& m1, const RiskAversionMeasure& m0,
                               const KernelLaw& law, const std::vector<double>& y_grid) {
    const std::vector<double> w_lhs = collapsed_weights(m1, law);
    const auto& ig = m1.node_inv_gamma();
    ResidualReport report;
    report.y = y_grid;
    for (double y : y_grid) {
        if (!(y > 0.0)) throw DomainError("residual grid must be positive");
        const double s = std::log(y);
        double lhs = 0.0;
        for (std::size_t k = 0; k < ig.size(); ++k) lhs += w_lhs[k] * std::exp(-s * ig[k]);
        const double rhs = cmim_eval(m0, y);
        report.lhs.push_back(lhs);
        report.rhs.push_back(rhs);
        const double rel = std::abs(lhs - rhs) / rhs;
        report.rel_err.push_back(rel);
        report.max_rel_err = std::max(report.max_rel_err, rel);
    }
    return report;
}

bool finiteness_check(const InverseMarginal& i1, const KernelLaw& law,
                      const std::vector<double>& y_grid) {
    auto expectation = [&](double y) {
        double total = 0.0;
        if (law.is_discrete()) {
            for (const DiscreteAtom& a : law.discrete().atoms)
                total += a.prob * i1.value(y * a.rho);
        } else {
            const double s2 = law.lognormal().sigma2;
            const double sd = std::sqrt(s2);
            const QuadratureRule& gh = gauss_hermite(kHermiteOrder);
            const double inv_sqrt_pi = 0.5641895835477562869480794515607726;
            for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
                const double rho =
                    std::exp(-0.5 * s2 + sd * 1.4142135623730950488016887242097 * gh.nodes[i]);
                total += gh.weights[i] * i1.value(y * rho) * inv_sqrt_pi;
            }
        }
        return total;
    };
    for (double y : y_grid) {
        double v;
        try {
            v = expectation(y);
        } catch (const RangeError&) {
            return false;
        }
        if (!std::isfinite(v)) return false;
    }
    return true;
}

PeriodSolve solve_period_checked(const RiskAversionMeasure& m_prev, const KernelLaw& law,
                                 const std::vector<double>& y_grid,
                                 const CmimSolveOptions& options) {
    RiskAversionMeasure out = solve_period(m_prev, law, options);
    ResidualReport report = period_residual(out, m_prev, law, y_grid);
    return PeriodSolve{m_prev, law, std::move(out), std::move(report)};
}

} // namespace pfpp
