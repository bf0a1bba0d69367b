#pragma once

#include "pfpp/cmim_solver.hpp"
#include "pfpp/grid_function.hpp"
#include "pfpp/kernels.hpp"
#include "pfpp/measures.hpp"

#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace pfpp {

struct DeconvConfig {
    double half_width = 30.0;     // L, log-coordinate units
    std::size_t n_points = 16384; // power of two
    double gamma1 = 0.0; // must be set (or derived from the state by advance())
    double gamma2 = 0.0;
    double fourier_floor = 1e-8; // eps_F: spectrum magnitudes below are zeroed
    double taper_fraction = 0.05;
    double split_width = 1.0;     // erf partition transition scale at t = 0
    double min_taper_width = 0.6; // lower bound on the edge window scale

    double taper_width() const;
    double window_center() const;       // where the edge window starts rolling off
    double trusted_half_width() const;  // interior kept by assemble()

    void validate() const;
};

/// Exponentially tilted kernel measure mu_k: for a discrete law, atoms at
/// t = -log rho with mass rho^{1-1/gamma_k} * prob; for a lognormal law, a
/// scaled Gaussian with closed-form spectrum.
class TiltedKernel {
  public:
    static TiltedKernel make(const KernelLaw& base, double gamma_k, const DeconvConfig& cfg);

    std::complex<double> spectrum(double xi) const;
    bool is_discrete() const { return base_.is_discrete(); }
    const KernelLaw& base() const { return base_; }
    double gamma_k() const { return gamma_k_; }

    struct DiscreteAtomT {
        double t;
        double mass;
    };
    const std::vector<DiscreteAtomT>& atoms() const { return atoms_; }

  private:
    TiltedKernel(KernelLaw base, double gamma_k) : base_(std::move(base)), gamma_k_(gamma_k) {}
    KernelLaw base_;
    double gamma_k_;
    std::vector<DiscreteAtomT> atoms_; // discrete representation (empty for lognormal)
};

struct DivideReport {
    std::size_t zeroed_total = 0;
    std::vector<double> offending_xi; // zeroed frequencies inside the central 90% band
    bool ill_posed_warning = false;
};

struct SpectrumDump {
    std::vector<double> xi;
    std::vector<std::complex<double>> data_spectrum;
    std::vector<std::complex<double>> kernel_spectrum;

    std::string to_csv() const; // xi, re, im, abs for both spectra
};

/// J0(t) = I0(e^t) sampled on the configured grid.
GridFunction to_log_coordinates(const InverseMarginal& i0, const DeconvConfig& cfg);

/// Tilt-and-split with a smooth partition of unity at t = 0:
/// J01 = J0 e^{t/g1} chi(t), J02 = J0 e^{t/g2} (1 - chi(t)).
/// Raises DomainMismatchError when a half grows toward its far edge.
std::pair<GridFunction, GridFunction> split(const GridFunction& j0, const DeconvConfig& cfg);

/// J1k = F^{-1}[ F[J0k] / F[mu_k] ] with the kernel spectrum evaluated in
/// closed form at grid frequencies; quotient modes with |F[mu]| < eps_F are
/// zeroed and counted. Lognormal kernels get a compact-support edge window
/// before the transform.
GridFunction fourier_divide(const GridFunction& j0k, const TiltedKernel& mu_k,
                            const DeconvConfig& cfg, DivideReport* report = nullptr,
                            SpectrumDump* dump = nullptr);

/// J1(t) = e^{-t/g1} J11 + e^{-t/g2} J12, trimmed to the trusted interior,
/// monotonicity-gated, and wrapped as a grid-backed inverse marginal with
/// power tails. Raises SolutionRejectedError if monotonicity fails.
InverseMarginal assemble(const GridFunction& j11, const GridFunction& j12,
                         const DeconvConfig& cfg);

/// Direct check of int rho I1(y rho) d nu = I0(y) by exact sums (discrete)
/// or 64-node Gauss-Hermite (lognormal); returns max relative error.
double convolution_residual(const InverseMarginal& i1, const KernelLaw& law,
                            const InverseMarginal& i0, const std::vector<double>& y_grid);

/// Same check with per-row diagnostics.
ResidualReport convolution_residual_report(const InverseMarginal& i1, const KernelLaw& law,
                                           const InverseMarginal& i0,
                                           const std::vector<double>& y_grid);

std::string grid_to_csv(const GridFunction& g);

/// Whole pipeline for one period.
struct DeconvSolution {
    InverseMarginal i1;
    DivideReport report_1;
    DivideReport report_2;
};
DeconvSolution deconv_solve(const InverseMarginal& i0, const KernelLaw& law,
                            const DeconvConfig& cfg, SpectrumDump* dump = nullptr);

} // namespace pfpp
