#pragma once

#include "pfpp/rng.hpp"

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

namespace pfpp {

/// One trading step of the binomial backend: up factor u > 1, down factor
/// 0 < d < 1, physical up probability p in (0, 1).
struct BinomialStep {
    double u = 0.0;
    double d = 0.0;
    double p = 0.0;
};

struct BinomialPeriodParams {
    std::vector<BinomialStep> steps;
};

struct BsPeriodParams {
    std::vector<double> lambda;                            // market price of risk
    std::optional<std::vector<std::vector<double>>> sigma; // volatility matrix, sim-only
};

struct DiscreteAtom {
    double rho = 0.0;
    double prob = 0.0;
};

/// One-period law of the pricing kernel rho = Z_n/Z_{n-1}; a probability
/// measure on (0, inf) with mean exactly 1.
class KernelLaw {
  public:
    struct FiniteDiscrete {
        std::vector<DiscreteAtom> atoms; // sorted by rho
    };
    struct LogNormal {
        double sigma2 = 0.0; // log rho ~ Normal(-sigma2/2, sigma2)
    };

    explicit KernelLaw(FiniteDiscrete fd);
    explicit KernelLaw(LogNormal ln);

    bool is_discrete() const { return std::holds_alternative<FiniteDiscrete>(law_); }
    const FiniteDiscrete& discrete() const { return std::get<FiniteDiscrete>(law_); }
    const LogNormal& lognormal() const { return std::get<LogNormal>(law_); }

  private:
    std::variant<FiniteDiscrete, LogNormal> law_;
};

inline constexpr std::size_t kBinomialStepCap = 20;

/// Enumerate the 2^N pricing-kernel outcomes of an N-step binomial period,
/// merging duplicate rho values (relative tolerance 1e-12).
KernelLaw kernel_from_binomial(const BinomialPeriodParams& params);

/// Lognormal law with sigma2 = |lambda|^2; lambda = 0 degenerates to the
/// discrete point mass at rho = 1.
KernelLaw kernel_from_bs(const BsPeriodParams& params);

/// int rho^a d nu. Discrete: exact sum. Lognormal: exp(sigma2 a (a-1) / 2).
double moment(const KernelLaw& law, double a);

/// E[log rho]: -sigma2/2 for lognormal, exact sum for discrete.
double log_moment(const KernelLaw& law);

/// True iff int (rho^{-1/g1} + rho^{1-1/g1} + rho^{1-1/g2}) d nu < inf.
bool cmim_integrability_check(const KernelLaw& law, double gamma_min, double gamma_max);

/// One draw of rho. Discrete: inverse CDF; lognormal: exp(-s2/2 - s Z).
double sample(const KernelLaw& law, RngStream& rng);

} // namespace pfpp
