#include "pfpp/sim.hpp"

#include "pfpp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace pfpp {

namespace {

ThetaBlock sample_theta(const ScenarioSpec& spec, RngStream& rng) {
    if (std::holds_alternative<IidBinomialSampler>(spec.source)) {
        const auto& s = std::get<IidBinomialSampler>(spec.source);
        BinomialPeriodParams params;
        for (std::size_t m = 0; m < s.n_steps; ++m) {
            BinomialStep step;
            step.u = s.u_lo + (s.u_hi - s.u_lo) * rng.next_uniform();
            step.d = s.d_lo + (s.d_hi - s.d_lo) * rng.next_uniform();
            step.p = s.p_lo + (s.p_hi - s.p_lo) * rng.next_uniform();
            params.steps.push_back(step);
        }
        return params;
    }
    const auto& s = std::get<IidBsSampler>(spec.source);
    BsPeriodParams params;
    for (std::size_t j = 0; j < s.dim; ++j)
        params.lambda.push_back(s.lambda_lo + (s.lambda_hi - s.lambda_lo) * rng.next_uniform());
    return params;
}

/// Draw a period outcome. For binomial thetas the sub-step Bernoullis are
/// drawn individually so the realized sub-path is known for replication.
struct PeriodDraw {
    double rho = 1.0;
    std::vector<bool> up_moves;
};

PeriodDraw draw_period(const ThetaBlock& theta, const KernelLaw& law, RngStream& rng) {
    PeriodDraw out;
    if (std::holds_alternative<BinomialPeriodParams>(theta)) {
        const auto& params = std::get<BinomialPeriodParams>(theta);
        for (const BinomialStep& s : params.steps) {
            const double q = (1.0 - s.d) / (s.u - s.d);
            const bool up = rng.next_uniform() < s.p;
            out.up_moves.push_back(up);
            out.rho *= up ? q / s.p : (1.0 - q) / (1.0 - s.p);
        }
    } else {
        out.rho = sample(law, rng);
    }
    return out;
}

} // namespace

void ScenarioSpec::validate() const {
    if (horizon == 0) throw ValidationError("scenario horizon must be >= 1");
    if (std::holds_alternative<FixedThetas>(source)) {
        if (std::get<FixedThetas>(source).thetas.size() != horizon)
            throw ValidationError("fixed theta list length must equal the horizon");
    } else if (std::holds_alternative<IidBinomialSampler>(source)) {
        const auto& s = std::get<IidBinomialSampler>(source);
        if (!(s.u_lo > 1.0) || !(s.u_lo <= s.u_hi))
            throw ValidationError("binomial sampler requires 1 < u_lo <= u_hi");
        if (!(s.d_lo > 0.0) || !(s.d_lo <= s.d_hi) || !(s.d_hi < 1.0))
            throw ValidationError("binomial sampler requires 0 < d_lo <= d_hi < 1");
        if (!(s.p_lo > 0.0) || !(s.p_lo <= s.p_hi) || !(s.p_hi < 1.0))
            throw ValidationError("binomial sampler requires 0 < p_lo <= p_hi < 1");
        if (s.n_steps == 0 || s.n_steps > kBinomialStepCap)
            throw ValidationError("binomial sampler steps out of range");
    } else {
        const auto& s = std::get<IidBsSampler>(source);
        if (s.dim == 0) throw ValidationError("bs sampler needs dim >= 1");
        if (!(s.lambda_lo <= s.lambda_hi)) throw ValidationError("bs sampler bounds inverted");
    }
}

void run_paths(const ScenarioSpec& spec, const InverseMarginal& i0, double x0,
               std::size_t n_paths, SolverRoute route, const PathSink& sink,
               const RunPathsOptions& options) {
    spec.validate();
    if (!(x0 > 0.0)) throw DomainError("x0 must be positive");
    AdvanceOptions adv = options.advance;
    adv.route = route;

    const bool fixed = std::holds_alternative<FixedThetas>(spec.source);
    PfppState base = PfppState::initial(i0);
    if (fixed) {
        for (const ThetaBlock& theta : std::get<FixedThetas>(spec.source).thetas)
            base = base.advance(theta, adv);
    }
    const double y0 = i0.invert(x0);

    for (std::size_t p = 0; p < n_paths; ++p) {
        PathRecord record;
        record.index = p;
        try {
            PfppState state = fixed ? base : PfppState::initial(i0);
            double y = y0;
            double x_prev = x0;
            for (std::size_t k = 1; k <= spec.horizon; ++k) {
                if (!fixed) {
                    RngStream trng = RngStream::keyed(spec.seed * 2 + 1, p, k);
                    record.thetas.push_back(sample_theta(spec, trng));
                    state = state.advance(record.thetas.back(), adv);
                }
                const PeriodEntry& entry = state.entries()[k - 1];
                RngStream rng = RngStream::keyed(spec.seed * 2, p, k);
                const PeriodDraw draw = draw_period(entry.theta, entry.law, rng);

                // Dual-variable composition of the optimal wealth recursion:
                // y_k = rho_k y_{k-1}, X*_k = I_k(y_k).
                PeriodOutcome outcome;
                outcome.rho = draw.rho;
                outcome.up_moves = draw.up_moves;
                if (options.with_holdings &&
                    std::holds_alternative<BinomialPeriodParams>(entry.theta)) {
                    const InverseMarginal& cur = state.inverse_marginal(k);
                    const double y_in = y;
                    ReplicationTree tree = binomial_replication(
                        std::get<BinomialPeriodParams>(entry.theta), x_prev,
                        [&](double rho) { return cur.value(y_in * rho); });
                    outcome.holdings = tree.along_path(draw.up_moves);
                }
                y *= draw.rho;
                const double x = state.inverse_marginal(k).value(y);
                if (!(x > 0.0)) throw NumericalError("wealth left the positive range");
                outcome.wealth = x;
                x_prev = x;
                record.periods.push_back(std::move(outcome));
            }
        } catch (const Error& e) {
            record.failure = e.what();
        }
        sink(std::move(record));
    }
}

std::vector<PathRecord> run_paths_collect(const ScenarioSpec& spec, const InverseMarginal& i0,
                                          double x0, std::size_t n_paths, SolverRoute route,
                                          const RunPathsOptions& options) {
    std::vector<PathRecord> out;
    out.reserve(n_paths);
    run_paths(spec, i0, x0, n_paths, route,
              [&](PathRecord&& r) { out.push_back(std::move(r)); }, options);
    return out;
}

// ---------------------------------------------------------------------------
// Replication

ReplicationTree binomial_replication(const BinomialPeriodParams& params, double x_start,
                                     const std::function<double(double)>& payoff, double s0) {
    const std::size_t n = params.steps.size();
    if (n == 0) throw ValidationError("replication needs at least one step");
    if (n > kBinomialStepCap) throw CapacityError("binomial period exceeds the step cap");
    for (const BinomialStep& s : params.steps) {
        if (!(s.u > 1.0) || !(s.d > 0.0) || !(s.d < 1.0) || s.u == s.d)
            throw ValidationError("invalid or degenerate binomial step");
    }
    if (!(s0 > 0.0)) throw ValidationError("spot must be positive");

    ReplicationTree tree;
    tree.stock.resize(n + 1);
    tree.values.resize(n + 1);
    tree.holdings.resize(n);

    tree.stock[0] = {s0};
    for (std::size_t m = 0; m < n; ++m) {
        const BinomialStep& s = params.steps[m];
        tree.stock[m + 1].resize(tree.stock[m].size() * 2);
        for (std::size_t idx = 0; idx < tree.stock[m].size(); ++idx) {
            tree.stock[m + 1][2 * idx] = tree.stock[m][idx] * s.d;     // down
            tree.stock[m + 1][2 * idx + 1] = tree.stock[m][idx] * s.u; // up
        }
    }

    // Leaf payoffs from the leaf pricing-kernel value.
    const std::size_t n_leaves = std::size_t{1} << n;
    tree.values[n].resize(n_leaves);
    for (std::size_t leaf = 0; leaf < n_leaves; ++leaf) {
        double rho = 1.0;
        for (std::size_t m = 0; m < n; ++m) {
            const BinomialStep& s = params.steps[m];
            const double q = (1.0 - s.d) / (s.u - s.d);
            const bool up = (leaf >> (n - 1 - m)) & 1;
            rho *= up ? q / s.p : (1.0 - q) / (1.0 - s.p);
        }
        tree.values[n][leaf] = payoff(rho);
    }

    for (std::size_t m = n; m-- > 0;) {
        const BinomialStep& s = params.steps[m];
        const double q = (1.0 - s.d) / (s.u - s.d);
        tree.values[m].resize(std::size_t{1} << m);
        tree.holdings[m].resize(std::size_t{1} << m);
        for (std::size_t idx = 0; idx < tree.values[m].size(); ++idx) {
            const double v_dn = tree.values[m + 1][2 * idx];
            const double v_up = tree.values[m + 1][2 * idx + 1];
            tree.values[m][idx] = q * v_up + (1.0 - q) * v_dn;
            const double spot = tree.stock[m][idx];
            const double delta = (v_up - v_dn) / (spot * (s.u - s.d));
            tree.holdings[m][idx] = {delta, tree.values[m][idx] - delta * spot};
        }
    }

    if (std::abs(tree.values[0][0] - x_start) > 1e-10 * std::max(1.0, std::abs(x_start)))
        throw BudgetMismatchError("x_start does not equal the root replication value");
    return tree;
}

std::vector<SubStepHolding> ReplicationTree::along_path(const std::vector<bool>& up_moves) const {
    if (up_moves.size() != holdings.size())
        throw ValidationError("path length must equal the number of steps");
    std::vector<SubStepHolding> out;
    std::size_t idx = 0;
    for (std::size_t m = 0; m < holdings.size(); ++m) {
        out.push_back(holdings[m][idx]);
        idx = 2 * idx + (up_moves[m] ? 1 : 0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Intra-period Black-Scholes wealth

BsWealthInterpolator::BsWealthInterpolator(const PfppState& state, std::size_t k,
                                           double x_at_k_minus_1, double t,
                                           const std::vector<double>& lambda) {
    if (k < 1 || k > state.period()) throw DomainError("period index out of range");
    if (!(t >= 0.0) || !(t < 1.0)) throw DomainError("interpolation time must lie in [0, 1)");
    if (!(x_at_k_minus_1 > 0.0)) throw DomainError("wealth must be positive");
    const InverseMarginal& cur = state.inverse_marginal(k);
    if (!cur.is_cmim())
        throw UnsupportedRouteError("intra-period interpolation needs a CMIM-backed period");
    const RiskAversionMeasure& m = cur.measure();
    inv_gamma_ = m.node_inv_gamma();
    weight_ = m.node_weight();
    lambda_ = lambda;
    sigma2_ = 0.0;
    for (double l : lambda) sigma2_ += l * l;
    time_ = t;
    y_ = state.inverse_marginal(k - 1).invert(x_at_k_minus_1);
}

double BsWealthInterpolator::operator()(double rho_partial) const {
    if (!(rho_partial > 0.0)) throw DomainError("partial kernel must be positive");
    const double s = std::log(y_ * rho_partial);
    const double remaining = sigma2_ * (1.0 - time_);
    double total = 0.0;
    for (std::size_t j = 0; j < inv_gamma_.size(); ++j) {
        const double b = inv_gamma_[j];
        // E[R^{1-b}] for the remaining lognormal factor R.
        total += weight_[j] * std::exp(-s * b - 0.5 * remaining * b * (1.0 - b));
    }
    return total;
}

double BsWealthInterpolator::at_increment(const std::vector<double>& brownian_increment) const {
    if (brownian_increment.size() != lambda_.size())
        throw DomainError("increment dimension must match lambda");
    double dot = 0.0;
    for (std::size_t j = 0; j < lambda_.size(); ++j) dot += lambda_[j] * brownian_increment[j];
    return (*this)(std::exp(-0.5 * sigma2_ * time_ - dot));
}

// ---------------------------------------------------------------------------
// Aggregation

SummaryReport summarize(const std::vector<PathRecord>& paths, double x0) {
    SummaryReport report;
    report.x0 = x0;
    report.n_paths = paths.size();
    std::size_t horizon = 0;
    for (const PathRecord& r : paths) {
        if (r.failed())
            ++report.n_failed;
        else
            horizon = std::max(horizon, r.periods.size());
    }
    if (report.n_failed == report.n_paths)
        throw PreconditionError("summarize needs at least one successful path");

    report.periods.resize(horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
        std::vector<double> wealth;
        double budget_acc = 0.0;
        std::size_t count = 0;
        for (const PathRecord& r : paths) {
            if (r.failed() || r.periods.size() <= k) continue;
            const double x_prev = (k == 0) ? x0 : r.periods[k - 1].wealth;
            wealth.push_back(r.periods[k].wealth);
            budget_acc += r.periods[k].rho * r.periods[k].wealth - x_prev;
            ++count;
        }
        std::sort(wealth.begin(), wealth.end());
        PeriodStats& st = report.periods[k];
        double mean = 0.0;
        for (double w : wealth) mean += w;
        mean /= static_cast<double>(wealth.size());
        double var = 0.0;
        for (double w : wealth) var += (w - mean) * (w - mean);
        st.mean = mean;
        st.stddev = wealth.size() > 1
                        ? std::sqrt(var / static_cast<double>(wealth.size() - 1))
                        : 0.0;
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(wealth.size() - 1);
            const std::size_t i = static_cast<std::size_t>(pos);
            if (i + 1 >= wealth.size()) return wealth.back();
            const double frac = pos - static_cast<double>(i);
            return wealth[i] * (1.0 - frac) + wealth[i + 1] * frac;
        };
        st.q05 = quantile(0.05);
        st.q25 = quantile(0.25);
        st.q50 = quantile(0.50);
        st.q75 = quantile(0.75);
        st.q95 = quantile(0.95);
        st.budget_residual_mean = budget_acc / static_cast<double>(count);
    }
    return report;
}

std::string theta_compact(const ThetaBlock& theta) {
    std::ostringstream os;
    if (std::holds_alternative<BinomialPeriodParams>(theta)) {
        os << "bin:";
        const auto& steps = std::get<BinomialPeriodParams>(theta).steps;
        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (i) os << '|';
            char buf[80];
            std::snprintf(buf, sizeof(buf), "%.12g;%.12g;%.12g", steps[i].u, steps[i].d,
                          steps[i].p);
            os << buf;
        }
    } else {
        os << "bs:";
        const auto& lambda = std::get<BsPeriodParams>(theta).lambda;
        for (std::size_t i = 0; i < lambda.size(); ++i) {
            if (i) os << '|';
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.12g", lambda[i]);
            os << buf;
        }
    }
    return os.str();
}

void write_paths_csv(std::ostream& os, const ScenarioSpec& spec,
                     const std::vector<PathRecord>& paths) {
    os << "path,period,theta,rho,wealth\n";
    const bool fixed = std::holds_alternative<FixedThetas>(spec.source);
    char buf[64];
    for (const PathRecord& r : paths) {
        if (r.failed()) continue;
        for (std::size_t k = 0; k < r.periods.size(); ++k) {
            const ThetaBlock& theta =
                fixed ? std::get<FixedThetas>(spec.source).thetas[k] : r.thetas[k];
            os << r.index << ',' << (k + 1) << ',' << theta_compact(theta) << ',';
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", r.periods[k].rho,
                          r.periods[k].wealth);
            os << buf;
        }
    }
}

} // namespace pfpp
