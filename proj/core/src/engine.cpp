#include "pfpp/engine.hpp"

#include "pfpp/errors.hpp"
#include "pfpp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pfpp {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kInvSqrtPi = 0.5641895835477562869480794515607726;

struct KernelNodes {
    std::vector<double> rho;
    std::vector<double> weight; // probabilities (discrete) or GH weights / sqrt(pi)
};

KernelNodes kernel_nodes(const KernelLaw& law) {
    KernelNodes nodes;
    if (law.is_discrete()) {
        for (const DiscreteAtom& a : law.discrete().atoms) {
            nodes.rho.push_back(a.rho);
            nodes.weight.push_back(a.prob);
        }
    } else {
        const double s2 = law.lognormal().sigma2;
        const double sd = std::sqrt(s2);
        const QuadratureRule& gh = gauss_hermite(64);
        for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
            nodes.rho.push_back(std::exp(-0.5 * s2 + sd * kSqrt2 * gh.nodes[i]));
            nodes.weight.push_back(gh.weights[i] * kInvSqrtPi);
        }
    }
    return nodes;
}

/// psi(w) = int_{I(1)}^{I(w)} I^{-1}(xi) d xi = w I(w) - I(1) - int_1^w I(u) du,
/// so that U(I(w)) = anchor + psi(w).
double psi_dual(const InverseMarginal& inv, double w) {
    const double tail = integrate_adaptive([&](double u) { return inv.value(u); }, 1.0, w, 1e-12);
    return w * inv.value(w) - inv.value(1.0) - tail;
}

} // namespace

std::string route_name(SolverRoute route) {
    switch (route) {
        case SolverRoute::Cmim: return "cmim";
        case SolverRoute::Deconv: return "deconv";
        case SolverRoute::Auto: return "auto";
    }
    return "auto";
}

SolverRoute route_from_name(const std::string& name) {
    if (name == "cmim") return SolverRoute::Cmim;
    if (name == "deconv") return SolverRoute::Deconv;
    if (name == "auto") return SolverRoute::Auto;
    throw ValidationError("unknown route '" + name + "'");
}

KernelLaw kernel_from_theta(const ThetaBlock& theta) {
    if (std::holds_alternative<BinomialPeriodParams>(theta))
        return kernel_from_binomial(std::get<BinomialPeriodParams>(theta));
    return kernel_from_bs(std::get<BsPeriodParams>(theta));
}

// ---------------------------------------------------------------------------
// PfppState

PfppState PfppState::initial(InverseMarginal i0, double u0_anchor) {
    return PfppState(std::move(i0), u0_anchor);
}

PfppState PfppState::from_parts(InverseMarginal i0, double a0, std::vector<PeriodEntry> entries) {
    PfppState st(std::move(i0), a0);
    st.entries_ = std::move(entries);
    return st;
}

const InverseMarginal& PfppState::inverse_marginal(std::size_t k) const {
    if (k == 0) return i0_;
    if (k > entries_.size()) throw DomainError("period index out of range");
    return entries_[k - 1].inverse_marginal;
}

double PfppState::anchor(std::size_t k) const {
    if (k == 0) return a0_;
    if (k > entries_.size()) throw DomainError("period index out of range");
    return entries_[k - 1].anchor;
}

PfppState PfppState::advance(const ThetaBlock& theta, const AdvanceOptions& options) const {
    const KernelLaw law = kernel_from_theta(theta);
    const InverseMarginal& prev = tip();
    const std::vector<double> y_grid =
        options.y_grid.empty() ? default_y_grid() : options.y_grid;

    SolverRoute route = options.route;
    if (route == SolverRoute::Auto) {
        route = (prev.is_cmim() &&
                 cmim_integrability_check(law, prev.measure().gamma_min(),
                                          prev.measure().gamma_max()))
                    ? SolverRoute::Cmim
                    : SolverRoute::Deconv;
    }

    InverseMarginal next = prev;
    double residual = 0.0;
    if (route == SolverRoute::Cmim) {
        if (!prev.is_cmim())
            throw UnsupportedRouteError("cmim route requires a measure-backed inverse marginal");
        PeriodSolve solve = solve_period_checked(prev.measure(), law, y_grid, options.cmim);
        residual = solve.residual_report.max_rel_err;
        if (residual > options.residual_tol_cmim)
            throw ConstructionFailedError("period residual " + std::to_string(residual) +
                                          " exceeds tolerance");
        next = InverseMarginal::from_measure(std::move(solve.output_measure));
    } else {
        DeconvConfig cfg = options.deconv;
        if (cfg.gamma1 <= 0.0 || cfg.gamma2 <= 0.0) {
            if (prev.is_cmim()) {
                cfg.gamma1 = prev.measure().gamma_min();
                cfg.gamma2 = prev.measure().gamma_max();
            } else {
                cfg.gamma1 = prev.grid().gamma1;
                cfg.gamma2 = prev.grid().gamma2;
            }
        }
        DeconvSolution sol = deconv_solve(prev, law, cfg);
        residual = convolution_residual(sol.i1, law, prev, y_grid);
        if (residual > options.residual_tol_deconv)
            throw ConstructionFailedError("period residual " + std::to_string(residual) +
                                          " exceeds tolerance");
        next = std::move(sol.i1);
    }

    // a_k = a_{k-1} + E[int_{I_k(rho)}^{I_k(1)} I_k^{-1}] = a_{k-1} - E[psi_k(rho)]
    const KernelNodes nodes = kernel_nodes(law);
    double e_psi = 0.0;
    for (std::size_t i = 0; i < nodes.rho.size(); ++i)
        e_psi += nodes.weight[i] * psi_dual(next, nodes.rho[i]);
    const double new_anchor = anchor(period()) - e_psi;

    PfppState out = *this;
    out.entries_.push_back(PeriodEntry{theta, law, route, std::move(next), new_anchor, residual});
    return out;
}

double wealth_step(const PfppState& state, std::size_t k, double x_prev, double rho_realized) {
    if (k < 1 || k > state.period()) throw DomainError("wealth_step requires 1 <= k <= period");
    if (!(x_prev > 0.0) || !(rho_realized > 0.0))
        throw DomainError("wealth and kernel realization must be positive");
    const double y = state.inverse_marginal(k - 1).invert(x_prev);
    return state.inverse_marginal(k).value(y * rho_realized);
}

// ---------------------------------------------------------------------------
// UtilityCurve

UtilityCurve::UtilityCurve(InverseMarginal backing, double anchor, std::vector<double> x_grid)
    : backing_(std::move(backing)), anchor_(anchor), x_(std::move(x_grid)) {
    u_.reserve(x_.size());
    for (double x : x_) u_.push_back(value(x));
    for (std::size_t i = 1; i < x_.size(); ++i)
        if (!(x_[i] > x_[i - 1])) throw ValidationError("x grid must be increasing");
}

double UtilityCurve::value(double x) const {
    if (!(x > 0.0)) throw DomainError("utility argument must be positive");
    const double w = backing_.invert(x);
    const double tail =
        integrate_adaptive([&](double u) { return backing_.value(u); }, 1.0, w, 1e-12);
    return anchor_ + w * x - backing_.value(1.0) - tail;
}

double UtilityCurve::value_at_dual(double w) const {
    if (!(w > 0.0)) throw DomainError("dual argument must be positive");
    return anchor_ + psi_dual(backing_, w);
}

std::string UtilityCurve::to_csv() const {
    std::string out = "x,u\n";
    char buf[80];
    for (std::size_t i = 0; i < x_.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", x_[i], u_[i]);
        out += buf;
    }
    return out;
}

std::vector<double> default_x_grid(std::size_t n, double lo, double hi) {
    return default_y_grid(n, lo, hi);
}

UtilityCurve reconstruct_utility(const PfppState& state, std::size_t k,
                                 const std::vector<double>& x_grid) {
    if (k < 1 || k > state.period())
        throw DomainError("reconstruct_utility requires 1 <= k <= period");
    return UtilityCurve(state.inverse_marginal(k), state.anchor(k), x_grid);
}

double convex_dual(const UtilityCurve& curve, double y) {
    if (!(y > 0.0)) throw DomainError("dual variable must be positive");
    return curve.value_at_dual(y) - y * curve.backing().value(y);
}

// ---------------------------------------------------------------------------
// Verification

double verify_martingale(const PfppState& state, std::size_t k,
                         const std::vector<double>& x_grid) {
    if (k < 1 || k > state.period()) throw DomainError("period index out of range");
    const InverseMarginal& prev = state.inverse_marginal(k - 1);
    const InverseMarginal& cur = state.inverse_marginal(k);
    const double a_prev = state.anchor(k - 1);
    const double a_cur = state.anchor(k);
    const KernelNodes nodes = kernel_nodes(state.entries()[k - 1].law);

    double max_dev = 0.0;
    for (double x : x_grid) {
        const double y = prev.invert(x);
        const double lhs = a_prev + psi_dual(prev, y);
        double rhs = a_cur;
        for (std::size_t i = 0; i < nodes.rho.size(); ++i)
            rhs += nodes.weight[i] * psi_dual(cur, y * nodes.rho[i]);
        max_dev = std::max(max_dev, std::abs(lhs - rhs));
    }
    return max_dev;
}

double verify_budget(const PfppState& state, std::size_t k, const std::vector<double>& y_grid) {
    if (k < 1 || k > state.period()) throw DomainError("period index out of range");
    return convolution_residual(state.inverse_marginal(k), state.entries()[k - 1].law,
                                state.inverse_marginal(k - 1), y_grid);
}

namespace {

struct Perturbation {
    double a, b, c;
};

double gap_impl(const PfppState& state, std::size_t k, double x, const Perturbation& p,
                double eps, bool shrink_for_positivity, double* eps_used) {
    const InverseMarginal& prev = state.inverse_marginal(k - 1);
    const InverseMarginal& cur = state.inverse_marginal(k);
    const KernelNodes nodes = kernel_nodes(state.entries()[k - 1].law);
    const double y = prev.invert(x);

    std::vector<double> x_star(nodes.rho.size()), h(nodes.rho.size());
    double budget = 0.0;
    for (std::size_t i = 0; i < nodes.rho.size(); ++i) {
        x_star[i] = cur.value(y * nodes.rho[i]);
        h[i] = p.a * std::tanh(p.b * (std::log(nodes.rho[i]) - p.c));
        budget += nodes.weight[i] * nodes.rho[i] * h[i];
    }

    double e = eps;
    for (int tries = 0;; ++tries) {
        bool positive = true;
        for (std::size_t i = 0; i < nodes.rho.size(); ++i)
            if (x_star[i] + e * (h[i] - budget) <= 0.0) {
                positive = false;
                break;
            }
        if (positive) break;
        if (!shrink_for_positivity || tries > 80)
            throw PreconditionError("could not build a positive budget-feasible perturbation");
        e *= 0.5;
    }
    if (eps_used) *eps_used = e;

    const double a_prev = state.anchor(k - 1);
    const double a_cur = state.anchor(k);
    const double target = a_prev + psi_dual(prev, y);
    double exp_u = a_cur;
    for (std::size_t i = 0; i < nodes.rho.size(); ++i) {
        const double xi = x_star[i] + e * (h[i] - budget);
        exp_u += nodes.weight[i] * psi_dual(cur, cur.invert(xi));
    }
    return target - exp_u;
}

} // namespace

bool verify_supermartingale(const PfppState& state, std::size_t k, double x,
                            std::size_t n_perturbations, RngStream& rng, double eps) {
    if (k < 1 || k > state.period()) throw DomainError("period index out of range");
    const double x_ref = state.inverse_marginal(k).value(state.inverse_marginal(k - 1).invert(x));
    for (std::size_t i = 0; i < n_perturbations; ++i) {
        Perturbation p;
        p.a = x_ref * (0.05 + 0.45 * rng.next_uniform());
        p.b = 0.3 + 2.7 * rng.next_uniform();
        p.c = -0.5 + rng.next_uniform();
        const double gap = gap_impl(state, k, x, p, eps, true, nullptr);
        if (gap < -1e-10) return false;
    }
    return true;
}

double supermartingale_gap(const PfppState& state, std::size_t k, double x, double a, double b,
                           double c, double eps) {
    if (k < 1 || k > state.period()) throw DomainError("period index out of range");
    return gap_impl(state, k, x, Perturbation{a, b, c}, eps, false, nullptr);
}

} // namespace pfpp
