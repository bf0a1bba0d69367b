#pragma once

#include "pfpp/cmim_solver.hpp"
#include "pfpp/deconv.hpp"
#include "pfpp/kernels.hpp"
#include "pfpp/measures.hpp"
#include "pfpp/rng.hpp"

#include <string>
#include <variant>
#include <vector>

namespace pfpp {

/// Model parameters revealed at the start of an evaluation period.
using ThetaBlock = std::variant<BinomialPeriodParams, BsPeriodParams>;

enum class SolverRoute { Cmim, Deconv, Auto };

std::string route_name(SolverRoute route);
SolverRoute route_from_name(const std::string& name);

struct AdvanceOptions {
    SolverRoute route = SolverRoute::Auto;
    double residual_tol_cmim = 1e-9;
    double residual_tol_deconv = 1e-4;
    DeconvConfig deconv;
    CmimSolveOptions cmim;
    std::vector<double> y_grid; // empty -> default_y_grid()
};

struct PeriodEntry {
    ThetaBlock theta;
    KernelLaw law;
    SolverRoute route; // route actually used (Cmim or Deconv)
    InverseMarginal inverse_marginal;
    double anchor;       // a_k = U_k(I_k(1))
    double residual;     // max relative residual of the period solve
};

/// Immutable per-period history of a forward construction: inverse marginals
/// I_0..I_n, realized theta blocks, utility anchors. advance() returns a new
/// state; existing snapshots stay valid.
class PfppState {
  public:
    static PfppState initial(InverseMarginal i0, double u0_anchor = 0.0);

    std::size_t period() const { return entries_.size(); }
    const InverseMarginal& inverse_marginal(std::size_t k) const;
    double anchor(std::size_t k) const;
    const std::vector<PeriodEntry>& entries() const { return entries_; }
    const InverseMarginal& tip() const { return inverse_marginal(period()); }

    PfppState advance(const ThetaBlock& theta, const AdvanceOptions& options = {}) const;

    /// Internal constructor for deserialization.
    static PfppState from_parts(InverseMarginal i0, double a0, std::vector<PeriodEntry> entries);

  private:
    PfppState(InverseMarginal i0, double a0) : i0_(std::move(i0)), a0_(a0) {}
    InverseMarginal i0_;
    double a0_;
    std::vector<PeriodEntry> entries_;
};

KernelLaw kernel_from_theta(const ThetaBlock& theta);

/// X*_k = I_k(rho * I_{k-1}^{-1}(x_prev)); strictly increasing in x_prev and
/// strictly decreasing in the realized kernel.
double wealth_step(const PfppState& state, std::size_t k, double x_prev, double rho_realized);

/// Tabulated utility over an x grid plus exact evaluation through the
/// backing inverse marginal (U' = I^{-1}).
class UtilityCurve {
  public:
    UtilityCurve(InverseMarginal backing, double anchor, std::vector<double> x_grid);

    double value(double x) const;            // exact (quadrature), not table lookup
    double value_at_dual(double w) const;    // U(I(w)) without inversion
    double marginal(double x) const { return backing_.invert(x); }
    const std::vector<double>& xs() const { return x_; }
    const std::vector<double>& us() const { return u_; }
    const InverseMarginal& backing() const { return backing_; }
    double anchor() const { return anchor_; }

    std::string to_csv() const;

  private:
    InverseMarginal backing_;
    double anchor_; // U(I(1))
    std::vector<double> x_, u_;
};

std::vector<double> default_x_grid(std::size_t n = 100, double lo = 1e-2, double hi = 1e2);

/// U_k over x_grid via U_k(x) = U_{k-1}(I_{k-1}(1)) + E[int_{I_k(rho)}^x I_k^{-1}].
UtilityCurve reconstruct_utility(const PfppState& state, std::size_t k,
                                 const std::vector<double>& x_grid);

/// Convex dual V(y) = U(I(y)) - y I(y).
double convex_dual(const UtilityCurve& curve, double y);

/// Martingale condition: max_x |U_{k-1}(x) - E[U_k(I_k(U'_{k-1}(x) rho))]|.
double verify_martingale(const PfppState& state, std::size_t k, const std::vector<double>& x_grid);

/// Budget condition: max over the grid of |E[rho I_k(y rho)] - I_{k-1}(y)|
/// relative to I_{k-1}(y).
double verify_budget(const PfppState& state, std::size_t k, const std::vector<double>& y_grid);

/// Supermartingale condition under randomized budget-feasible perturbations
/// X = X* + eps (h(rho) - E[rho h(rho)]); returns true iff all perturbations
/// satisfy E[U_k(X)] <= U_{k-1}(x) + 1e-10.
bool verify_supermartingale(const PfppState& state, std::size_t k, double x,
                            std::size_t n_perturbations, RngStream& rng, double eps = 0.1);

/// Optimality gap U_{k-1}(x) - E[U_k(X_eps)] for one fixed perturbation
/// shape (a, b, c): h(rho) = a tanh(b (log rho - c)). Used for the eps^2
/// gap-law check.
double supermartingale_gap(const PfppState& state, std::size_t k, double x, double a, double b,
                           double c, double eps);

} // namespace pfpp
