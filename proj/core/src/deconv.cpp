#include "pfpp/deconv.hpp"

#include "pfpp/errors.hpp"
#include "pfpp/fft.hpp"
#include "pfpp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pfpp {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kInvSqrtPi = 0.5641895835477562869480794515607726;

double erfc_step(double x) { return 0.5 * std::erfc(x); }

} // namespace

double DeconvConfig::taper_width() const {
    return std::max(half_width * taper_fraction / 5.0, min_taper_width);
}

double DeconvConfig::window_center() const { return half_width - 5.6 * kSqrt2 * taper_width(); }

double DeconvConfig::trusted_half_width() const { return window_center() - 3.0 * taper_width(); }

void DeconvConfig::validate() const {
    if (!(gamma1 > 0.0) || !(gamma1 <= gamma2)) throw ConfigError("require 0 < gamma1 <= gamma2");
    if (!(half_width > 0.0)) throw ConfigError("half_width must be positive");
    if (n_points < 16 || (n_points & (n_points - 1)) != 0)
        throw ConfigError("n_points must be a power of two >= 16");
    if (!(fourier_floor > 0.0)) throw ConfigError("fourier_floor must be positive");
    if (!(taper_fraction > 0.0) || !(taper_fraction < 0.5))
        throw ConfigError("taper_fraction must lie in (0, 0.5)");
    if (!(split_width > 0.0)) throw ConfigError("split_width must be positive");
    if (!(trusted_half_width() > 1.0))
        throw ConfigError("grid too small for the configured edge window");
}

// ---------------------------------------------------------------------------
// TiltedKernel

TiltedKernel TiltedKernel::make(const KernelLaw& base, double gamma_k, const DeconvConfig& cfg) {
    if (!(gamma_k > 0.0)) throw ConfigError("gamma_k must be positive");
    TiltedKernel tk(base, gamma_k);
    if (base.is_discrete()) {
        for (const DiscreteAtom& a : base.discrete().atoms) {
            const double t = -std::log(a.rho);
            if (std::abs(t) > cfg.half_width)
                throw ConfigError("discrete kernel atom falls outside the grid [-L, L]");
            tk.atoms_.push_back({t, a.prob * std::pow(a.rho, 1.0 - 1.0 / gamma_k)});
        }
    } else {
        const double s2 = base.lognormal().sigma2;
        // Localization: the Gaussian must fit inside the grid to 1e-12 mass.
        if (cfg.half_width < 12.0 * std::sqrt(s2) + 1.0)
            throw ConfigError("grid half_width too small for the lognormal kernel support");
        if (cfg.split_width <= 1.2 * std::sqrt(s2))
            throw ConfigError("split_width must exceed the lognormal kernel scale");
    }
    return tk;
}

std::complex<double> TiltedKernel::spectrum(double xi) const {
    if (is_discrete()) {
        std::complex<double> s = 0.0;
        for (const DiscreteAtomT& a : atoms_)
            s += a.mass * std::exp(std::complex<double>(0.0, -xi * a.t));
        return s;
    }
    // exp(-(s2/2) [xi^2 + 2 i xi (1/g - 1/2) - (1/g)(1/g - 1)])
    const double s2 = base_.lognormal().sigma2;
    const double ig = 1.0 / gamma_k_;
    const std::complex<double> expo(-0.5 * s2 * xi * xi + 0.5 * s2 * ig * (ig - 1.0),
                                    -s2 * xi * (ig - 0.5));
    return std::exp(expo);
}

// ---------------------------------------------------------------------------
// Pipeline operations

GridFunction to_log_coordinates(const InverseMarginal& i0, const DeconvConfig& cfg) {
    cfg.validate();
    return GridFunction::sample([&](double t) { return i0.value(std::exp(t)); }, cfg.half_width,
                                cfg.n_points);
}

std::pair<GridFunction, GridFunction> split(const GridFunction& j0, const DeconvConfig& cfg) {
    cfg.validate();
    const std::size_t n = j0.size();
    std::vector<double> v1(n), v2(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = j0.t_at(j);
        const double chi = erfc_step(t / (kSqrt2 * cfg.split_width));
        v1[j] = j0.values[j] * std::exp(t / cfg.gamma1) * chi;
        v2[j] = j0.values[j] * std::exp(t / cfg.gamma2) * (1.0 - chi);
    }

    // Growth gate: each half must stay bounded toward its far edge.
    auto gate = [&](const std::vector<double>& v, bool left_half, const char* name) {
        const std::size_t edge = n / 20;           // outer 5% of the half's support
        const double inner = std::min(3.0, cfg.half_width / 10.0);
        double edge_max = 0.0;
        for (std::size_t j = 0; j < edge; ++j) {
            const std::size_t idx = left_half ? j : n - 1 - j;
            edge_max = std::max(edge_max, std::abs(v[idx]));
        }
        std::vector<double> inner_vals;
        for (std::size_t j = 0; j < n; ++j) {
            const double t = j0.t_at(j);
            if (std::abs(t) <= inner && (left_half ? t < 0.0 : t >= 0.0))
                inner_vals.push_back(std::abs(v[j]));
        }
        std::sort(inner_vals.begin(), inner_vals.end());
        const double med = inner_vals.empty() ? 0.0 : inner_vals[inner_vals.size() / 2];
        if (edge_max > 1e6 * std::max(med, 1e-300))
            throw DomainMismatchError(std::string(name) +
                                      " grows toward the grid edge; data outside the "
                                      "admissible class for (gamma1, gamma2)");
    };
    gate(v1, true, "tilted left half");
    gate(v2, false, "tilted right half");

    return {GridFunction(cfg.half_width, std::move(v1)),
            GridFunction(cfg.half_width, std::move(v2))};
}

namespace {

std::vector<double> grid_frequencies(std::size_t n, double half_width) {
    std::vector<double> xi(n);
    const double dxi = 3.141592653589793238462643383279502884 / half_width;
    for (std::size_t m = 0; m < n; ++m) {
        const double signed_m = (m < n / 2) ? static_cast<double>(m)
                                            : static_cast<double>(m) - static_cast<double>(n);
        xi[m] = dxi * signed_m;
    }
    return xi;
}

} // namespace

GridFunction fourier_divide(const GridFunction& j0k, const TiltedKernel& mu_k,
                            const DeconvConfig& cfg, DivideReport* report, SpectrumDump* dump) {
    cfg.validate();
    const std::size_t n = j0k.size();
    std::vector<std::complex<double>> buf(n);

    if (mu_k.is_discrete()) {
        for (std::size_t j = 0; j < n; ++j) buf[j] = j0k.values[j];
    } else {
        // Compact-support edge window keeps the seam out of the quotient;
        // a smooth kernel's deconvolution response is local, so the window
        // only perturbs the (trimmed) edge region.
        const double t0 = cfg.window_center();
        const double tw = cfg.taper_width();
        for (std::size_t j = 0; j < n; ++j) {
            double w = erfc_step((std::abs(j0k.t_at(j)) - t0) / (kSqrt2 * tw));
            if (w < 1e-14) w = 0.0;
            buf[j] = j0k.values[j] * w;
        }
    }

    fft_inplace(buf, false);

    const std::vector<double> xi = grid_frequencies(n, j0k.half_width);
    DivideReport local;
    const double band_limit = 0.45 * (3.141592653589793238462643383279502884 / j0k.half_width) *
                              static_cast<double>(n); // central 90% of the band
    std::vector<std::complex<double>> kernel_sp;
    if (dump) kernel_sp.resize(n);
    std::vector<bool> zeroed(n, false);
    for (std::size_t m = 0; m < n; ++m) {
        const std::complex<double> K = mu_k.spectrum(xi[m]);
        if (dump) kernel_sp[m] = K;
        if (std::abs(K) < cfg.fourier_floor) {
            buf[m] = 0.0;
            zeroed[m] = true;
            ++local.zeroed_total;
        } else {
            buf[m] /= K;
        }
    }
    // Ill-posedness means interior spectral dips: a zeroed frequency with
    // live spectrum beyond it. A smooth kernel whose transform decays
    // monotonically into the floor only loses its tail (regularization),
    // which is not the interference regime.
    double live_max = 0.0;
    for (std::size_t m = 0; m < n; ++m)
        if (!zeroed[m]) live_max = std::max(live_max, std::abs(xi[m]));
    for (std::size_t m = 0; m < n; ++m)
        if (zeroed[m] && std::abs(xi[m]) <= band_limit && std::abs(xi[m]) < live_max)
            local.offending_xi.push_back(xi[m]);
    std::sort(local.offending_xi.begin(), local.offending_xi.end());
    local.ill_posed_warning = !local.offending_xi.empty();

    if (dump) {
        dump->xi = xi;
        dump->kernel_spectrum = std::move(kernel_sp);
        dump->data_spectrum = buf; // post-division quotient
    }

    fft_inplace(buf, true);
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = buf[j].real();
    if (report) *report = std::move(local);
    return GridFunction(j0k.half_width, std::move(out));
}

InverseMarginal assemble(const GridFunction& j11, const GridFunction& j12,
                         const DeconvConfig& cfg) {
    cfg.validate();
    if (j11.size() != j12.size() || j11.half_width != j12.half_width)
        throw ValidationError("assemble requires matching grids");
    const std::size_t n = j11.size();
    const double trusted = cfg.trusted_half_width();

    std::vector<double> t_all, j_all;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = j11.t_at(j);
        if (std::abs(t) > trusted) continue;
        t_all.push_back(t);
        j_all.push_back(std::exp(-t / cfg.gamma1) * j11.values[j] +
                        std::exp(-t / cfg.gamma2) * j12.values[j]);
    }
    if (t_all.size() < 8) throw ValidationError("trusted interior too small");

    // Gate: I1 must be positive and non-increasing (relative tolerance 1e-6)
    // on a centered core. Residual seam artifacts may wiggle near the
    // trusted boundary where J1 is tiny; those samples are trimmed, but the
    // surviving core must cover a minimum half-width or the solve is
    // rejected as outside the admissible class.
    std::size_t center = 0;
    for (std::size_t i = 1; i < t_all.size(); ++i)
        if (std::abs(t_all[i]) < std::abs(t_all[center])) center = i;
    auto ok_pair = [&](std::size_t lo, std::size_t hi) {
        return j_all[lo] > 0.0 && j_all[hi] > 0.0 &&
               j_all[hi] <= j_all[lo] * (1.0 + 1e-6);
    };
    std::size_t lo = center, hi = center;
    if (!(j_all[center] > 0.0))
        throw SolutionRejectedError("assembled inverse marginal is not positive");
    while (hi + 1 < t_all.size() && ok_pair(hi, hi + 1)) ++hi;
    while (lo > 0 && ok_pair(lo - 1, lo)) --lo;
    const double min_core = std::max(3.0, 0.125 * trusted);
    if (t_all[hi] < min_core || t_all[lo] > -min_core)
        throw SolutionRejectedError("assembled inverse marginal is not monotone");

    std::vector<double> t_keep(t_all.begin() + static_cast<std::ptrdiff_t>(lo),
                               t_all.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    std::vector<double> j_keep(j_all.begin() + static_cast<std::ptrdiff_t>(lo),
                               j_all.begin() + static_cast<std::ptrdiff_t>(hi + 1));
    return InverseMarginal::from_grid(std::move(t_keep), std::move(j_keep), cfg.gamma1,
                                      cfg.gamma2);
}

ResidualReport convolution_residual_report(const InverseMarginal& i1, const KernelLaw& law,
                                           const InverseMarginal& i0,
                                           const std::vector<double>& y_grid) {
    ResidualReport report;
    report.y = y_grid;
    const QuadratureRule& gh = gauss_hermite(64);
    for (double y : y_grid) {
        double lhs = 0.0;
        if (law.is_discrete()) {
            for (const DiscreteAtom& a : law.discrete().atoms)
                lhs += a.prob * a.rho * i1.value(y * a.rho);
        } else {
            const double s2 = law.lognormal().sigma2;
            const double sd = std::sqrt(s2);
            for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
                const double rho = std::exp(-0.5 * s2 + sd * kSqrt2 * gh.nodes[i]);
                lhs += gh.weights[i] * rho * i1.value(y * rho) * kInvSqrtPi;
            }
        }
        const double rhs = i0.value(y);
        const double rel = std::abs(lhs - rhs) / rhs;
        report.lhs.push_back(lhs);
        report.rhs.push_back(rhs);
        report.rel_err.push_back(rel);
        report.max_rel_err = std::max(report.max_rel_err, rel);
    }
    return report;
}

double convolution_residual(const InverseMarginal& i1, const KernelLaw& law,
                            const InverseMarginal& i0, const std::vector<double>& y_grid) {
    return convolution_residual_report(i1, law, i0, y_grid).max_rel_err;
}

std::string grid_to_csv(const GridFunction& g) {
    std::string out = "t,value\n";
    char line[80];
    for (std::size_t j = 0; j < g.size(); ++j) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g\n", g.t_at(j), g.values[j]);
        out += line;
    }
    return out;
}

DeconvSolution deconv_solve(const InverseMarginal& i0, const KernelLaw& law,
                            const DeconvConfig& cfg, SpectrumDump* dump) {
    cfg.validate();
    const GridFunction j0 = to_log_coordinates(i0, cfg);
    auto [j01, j02] = split(j0, cfg);
    const TiltedKernel mu1 = TiltedKernel::make(law, cfg.gamma1, cfg);
    const TiltedKernel mu2 = TiltedKernel::make(law, cfg.gamma2, cfg);
    DivideReport r1, r2;
    GridFunction j11 = fourier_divide(j01, mu1, cfg, &r1, dump);
    GridFunction j12 = fourier_divide(j02, mu2, cfg, &r2, nullptr);
    InverseMarginal i1 = assemble(j11, j12, cfg);
    return DeconvSolution{std::move(i1), std::move(r1), std::move(r2)};
}

std::string SpectrumDump::to_csv() const {
    std::string out = "xi,data_re,data_im,data_abs,kernel_re,kernel_im,kernel_abs\n";
    char buf[240];
    for (std::size_t i = 0; i < xi.size(); ++i) {
        const auto& d = data_spectrum[i];
        const auto& k = kernel_spectrum[i];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", xi[i],
                      d.real(), d.imag(), std::abs(d), k.real(), k.imag(), std::abs(k));
        out += buf;
    }
    return out;
}

} // namespace pfpp
