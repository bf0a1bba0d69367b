#pragma once

#include "pfpp/kernels.hpp"
#include "pfpp/measures.hpp"

#include <vector>

namespace pfpp {

/// Options for the closed-form period solve.
struct CmimSolveOptions {
    /// Density cells are bisected until the reweighting factor's curvature
    /// across a cell drops below this relative tolerance.
    double cell_refine_tol = 5e-11;
    double max_cell_width = 0.05;
};

/// Per-row residual diagnostics, CSV-emittable as (y, lhs, rhs, rel_err).
struct ResidualReport {
    std::vector<double> y;
    std::vector<double> lhs;
    std::vector<double> rhs;
    std::vector<double> rel_err;
    double max_rel_err = 0.0;

    std::string to_csv() const;
};

/// One completed single-period solve.
struct PeriodSolve {
    RiskAversionMeasure input_measure;
    KernelLaw kernel;
    RiskAversionMeasure output_measure;
    ResidualReport residual_report;
};

/// Default residual grid: 200 log-spaced points on [1e-2, 1e2].
std::vector<double> default_y_grid(std::size_t n = 200, double lo = 1e-2, double hi = 1e2);

/// Closed-form solve of int rho I1(y rho) d nu = I0(y) within the CMIM class:
/// each atom weight divides by int rho^{1-1/gamma} d nu; density cells are
/// refined and reweighted by the cell average of the same factor.
/// Support is unchanged.
RiskAversionMeasure solve_period(const RiskAversionMeasure& m_prev, const KernelLaw& law,
                                 const CmimSolveOptions& options = {});

/// Max over y_grid of |int rho I1(y rho) d nu - I0(y)| / I0(y).
/// Discrete laws use exact sums; lognormal uses 64-node Gauss-Hermite.
ResidualReport period_residual(const RiskAversionMeasure& m1, const RiskAversionMeasure& m0,
                               const KernelLaw& law, const std::vector<double>& y_grid);

/// Checks int I1(y rho) d nu < inf numerically across y_grid.
bool finiteness_check(const InverseMarginal& i1, const KernelLaw& law,
                      const std::vector<double>& y_grid);

/// solve_period plus residual gate bookkeeping.
PeriodSolve solve_period_checked(const RiskAversionMeasure& m_prev, const KernelLaw& law,
                                 const std::vector<double>& y_grid,
                                 const CmimSolveOptions& options = {});

} // namespace pfpp
