#pragma once

#include "pfpp/engine.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace pfpp {

/// Period-parameter source for a simulation run.
struct FixedThetas {
    std::vector<ThetaBlock> thetas;
};
struct IidBinomialSampler {
    std::size_t n_steps = 1;
    double u_lo = 1.05, u_hi = 1.3;
    double d_lo = 0.75, d_hi = 0.95;
    double p_lo = 0.35, p_hi = 0.65;
};
struct IidBsSampler {
    std::size_t dim = 1;
    double lambda_lo = -0.5, lambda_hi = 0.5;
};

struct ScenarioSpec {
    std::size_t horizon = 1;
    std::variant<FixedThetas, IidBinomialSampler, IidBsSampler> source;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SubStepHolding {
    double delta = 0.0; // risky-asset units
    double bond = 0.0;  // numeraire units
};

struct PeriodOutcome {
    double rho = 0.0;
    double wealth = 0.0;
    std::vector<bool> up_moves;           // binomial backend: realized sub-steps
    std::vector<SubStepHolding> holdings; // binomial backend, along the realized sub-path
};

struct PathRecord {
    std::size_t index = 0;
    std::vector<PeriodOutcome> periods;
    std::vector<ThetaBlock> thetas; // per-path thetas (iid sources only)
    std::string failure;            // nonempty if the path was quarantined

    bool failed() const { return !failure.empty(); }
    double terminal_wealth() const { return periods.empty() ? 0.0 : periods.back().wealth; }
};

struct RunPathsOptions {
    AdvanceOptions advance;
    bool with_holdings = false;
};

using PathSink = std::function<void(PathRecord&&)>;

/// Run the forward loop per path: observe theta, advance the construction,
/// draw rho, step the optimal wealth. Deterministic per (spec.seed, path
/// index); solver failures are quarantined into the record.
void run_paths(const ScenarioSpec& spec, const InverseMarginal& i0, double x0,
               std::size_t n_paths, SolverRoute route, const PathSink& sink,
               const RunPathsOptions& options = {});

std::vector<PathRecord> run_paths_collect(const ScenarioSpec& spec, const InverseMarginal& i0,
                                          double x0, std::size_t n_paths, SolverRoute route,
                                          const RunPathsOptions& options = {});

/// Backward-induction replication of payoff(rho_leaf) over one binomial
/// period. Level m holds 2^m nodes in path-bit order (bit 1 = up move).
struct ReplicationTree {
    std::vector<std::vector<double>> values; // levels 0..N
    std::vector<std::vector<double>> stock;  // levels 0..N
    std::vector<std::vector<SubStepHolding>> holdings; // levels 0..N-1

    std::vector<SubStepHolding> along_path(const std::vector<bool>& up_moves) const;
};

ReplicationTree binomial_replication(const BinomialPeriodParams& params, double x_start,
                                     const std::function<double(double)>& payoff,
                                     double s0 = 1.0);

/// Intra-period optimal wealth in the Black-Scholes backend: the conditional
/// expectation X_t = E[X_k Z_k / Z_t | F_t] in closed form per CMIM
/// component, as a function of the realized partial kernel
/// rho_t = exp(-|lambda|^2 t / 2 - lambda . (B_t - B_{k-1})).
class BsWealthInterpolator {
  public:
    BsWealthInterpolator(const PfppState& state, std::size_t k, double x_at_k_minus_1, double t,
                         const std::vector<double>& lambda);

    double operator()(double rho_partial) const;
    double at_increment(const std::vector<double>& brownian_increment) const;

  private:
    std::vector<double> inv_gamma_, weight_;
    std::vector<double> lambda_;
    double y_ = 0.0;
    double sigma2_ = 0.0;
    double time_ = 0.0;
};

struct PeriodStats {
    double mean = 0.0;
    double stddev = 0.0;
    double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
    double budget_residual_mean = 0.0; // mean of rho_k X_k - X_{k-1}
};

struct SummaryReport {
    std::size_t n_paths = 0;
    std::size_t n_failed = 0;
    double x0 = 0.0;
    std::vector<PeriodStats> periods;
};

SummaryReport summarize(const std::vector<PathRecord>& paths, double x0);

/// CSV streaming: path, period, theta, rho, wealth (one row per period).
void write_paths_csv(std::ostream& os, const ScenarioSpec& spec,
                     const std::vector<PathRecord>& paths);
std::string theta_compact(const ThetaBlock& theta);

} // namespace pfpp
