#include "pfpp/kernels.hpp"

#include "pfpp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pfpp {

namespace {

void validate_step(const BinomialStep& s) {
    if (!(s.u > 1.0) || !std::isfinite(s.u)) throw ValidationError("binomial step requires u > 1");
    if (!(s.d > 0.0) || !(s.d < 1.0)) throw ValidationError("binomial step requires 0 < d < 1");
    if (!(s.p > 0.0) || !(s.p < 1.0)) throw ValidationError("binomial step requires 0 < p < 1");
}

} // namespace

KernelLaw::KernelLaw(FiniteDiscrete fd) : law_(std::move(fd)) {
    auto& atoms = std::get<FiniteDiscrete>(law_).atoms;
    if (atoms.empty()) throw ValidationError("discrete kernel law needs at least one atom");
    std::sort(atoms.begin(), atoms.end(),
              [](const DiscreteAtom& a, const DiscreteAtom& b) { return a.rho < b.rho; });
    double psum = 0.0, mean = 0.0;
    for (const DiscreteAtom& a : atoms) {
        if (!(a.rho > 0.0) || !std::isfinite(a.rho))
            throw ValidationError("kernel atom rho must be positive");
        if (!(a.prob > 0.0) || !(a.prob <= 1.0))
            throw ValidationError("kernel atom probability must lie in (0, 1]");
        psum += a.prob;
        mean += a.prob * a.rho;
    }
    if (std::abs(psum - 1.0) > 1e-12)
        throw ValidationError("kernel probabilities must sum to 1 (got " + std::to_string(psum) +
                              ")");
    if (std::abs(mean - 1.0) > 1e-12)
        throw ValidationError("kernel mean must equal 1 (got " + std::to_string(mean) + ")");
}

KernelLaw::KernelLaw(LogNormal ln) : law_(ln) {
    if (!(ln.sigma2 > 0.0) || !std::isfinite(ln.sigma2))
        throw ValidationError("lognormal kernel requires sigma2 > 0");
}

KernelLaw kernel_from_binomial(const BinomialPeriodParams& params) {
    const std::size_t n = params.steps.size();
    if (n > kBinomialStepCap)
        throw CapacityError("binomial period has " + std::to_string(n) +
                            " steps; cap is " + std::to_string(kBinomialStepCap));
    for (const BinomialStep& s : params.steps) validate_step(s);

    std::vector<DiscreteAtom> atoms{{1.0, 1.0}};
    for (const BinomialStep& s : params.steps) {
        const double q = (1.0 - s.d) / (s.u - s.d);
        const double up = q / s.p;
        const double down = (1.0 - q) / (1.0 - s.p);
        std::vector<DiscreteAtom> next;
        next.reserve(2 * atoms.size());
        for (const DiscreteAtom& a : atoms) {
            next.push_back({a.rho * up, a.prob * s.p});
            next.push_back({a.rho * down, a.prob * (1.0 - s.p)});
        }
        atoms.swap(next);
    }

    std::sort(atoms.begin(), atoms.end(),
              [](const DiscreteAtom& a, const DiscreteAtom& b) { return a.rho < b.rho; });
    std::vector<DiscreteAtom> merged;
    for (const DiscreteAtom& a : atoms) {
        if (!merged.empty() && std::abs(a.rho - merged.back().rho) <= 1e-12 * merged.back().rho)
            merged.back().prob += a.prob;
        else
            merged.push_back(a);
    }
    return KernelLaw(KernelLaw::FiniteDiscrete{std::move(merged)});
}

KernelLaw kernel_from_bs(const BsPeriodParams& params) {
    double s2 = 0.0;
    for (double l : params.lambda) {
        if (!std::isfinite(l)) throw ValidationError("lambda components must be finite");
        s2 += l * l;
    }
    if (params.sigma) {
        const auto& m = *params.sigma;
        const std::size_t k = m.size();
        if (k != params.lambda.size())
            throw ValidationError("sigma dimension must match lambda");
        for (const auto& row : m)
            if (row.size() != k) throw ValidationError("sigma must be square");
        // Gaussian elimination determinant check.
        auto a = m;
        double det = 1.0;
        for (std::size_t c = 0; c < k; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < k; ++r)
                if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
            if (std::abs(a[piv][c]) < 1e-14) throw ValidationError("sigma must be nonsingular");
            std::swap(a[piv], a[c]);
            det *= a[c][c];
            for (std::size_t r = c + 1; r < k; ++r) {
                const double f = a[r][c] / a[c][c];
                for (std::size_t cc = c; cc < k; ++cc) a[r][cc] -= f * a[c][cc];
            }
        }
        (void)det;
    }
    if (s2 == 0.0) return KernelLaw(KernelLaw::FiniteDiscrete{{{1.0, 1.0}}});
    return KernelLaw(KernelLaw::LogNormal{s2});
}

double moment(const KernelLaw& law, double a) {
    if (!std::isfinite(a)) throw DomainError("moment exponent must be finite");
    if (law.is_discrete()) {
        double s = 0.0;
        for (const DiscreteAtom& at : law.discrete().atoms)
            s += at.prob * std::exp(a * std::log(at.rho));
        return s;
    }
    return std::exp(0.5 * law.lognormal().sigma2 * a * (a - 1.0));
}

double log_moment(const KernelLaw& law) {
    if (law.is_discrete()) {
        double s = 0.0;
        for (const DiscreteAtom& at : law.discrete().atoms) s += at.prob * std::log(at.rho);
        return s;
    }
    return -0.5 * law.lognormal().sigma2;
}

bool cmim_integrability_check(const KernelLaw& law, double gamma_min, double gamma_max) {
    if (!(gamma_min > 0.0) || !(gamma_min <= gamma_max))
        throw DomainError("require 0 < gamma_min <= gamma_max");
    const double m1 = moment(law, -1.0 / gamma_min);
    const double m2 = moment(law, 1.0 - 1.0 / gamma_min);
    const double m3 = moment(law, 1.0 - 1.0 / gamma_max);
    return std::isfinite(m1) && std::isfinite(m2) && std::isfinite(m3);
}

double sample(const KernelLaw& law, RngStream& rng) {
    if (law.is_discrete()) {
        const auto& atoms = law.discrete().atoms;
        const double u = rng.next_uniform();
        double cum = 0.0;
        for (const DiscreteAtom& a : atoms) {
            cum += a.prob;
            if (u <= cum) return a.rho;
        }
        return atoms.back().rho;
    }
    const double s2 = law.lognormal().sigma2;
    const double sd = std::sqrt(s2);
    return std::exp(-0.5 * s2 - sd * rng.next_normal());
}

} // namespace pfpp
