#include "pfpp/engine.hpp"
#include "pfpp/errors.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>

using namespace pfpp;

namespace {

InverseMarginal log_marginal() { // I(y) = 1/y
    return InverseMarginal::from_measure(RiskAversionMeasure({{1.0, 1.0}}, {}, 0.5, 2.0));
}

InverseMarginal crra2() { // I(y) = y^{-1/2}
    return InverseMarginal::from_measure(RiskAversionMeasure({{2.0, 1.0}}, {}, 1.0, 3.0));
}

InverseMarginal mixture() {
    return InverseMarginal::from_measure(
        RiskAversionMeasure({{1.6, 0.4}, {2.8, 0.6}}, {}, 1.2, 3.2));
}

const ThetaBlock bs_03 = BsPeriodParams{{0.3}, {}};
const ThetaBlock bin_step = BinomialPeriodParams{{{1.2, 0.9, 0.6}}};

ThetaBlock degenerate_binomial() {
    const double u = 1.25, d = 0.85;
    const double q = (1.0 - d) / (u - d);
    return BinomialPeriodParams{{{u, d, q}}};
}

} // namespace

TEST_CASE("advance: log utility is invariant under both backends") {
    PfppState state = PfppState::initial(log_marginal(), 0.0);
    state = state.advance(bs_03);
    state = state.advance(bin_step);
    for (std::size_t k = 1; k <= 2; ++k) {
        const auto& m = state.inverse_marginal(k).measure();
        CHECK(m.atoms()[0].gamma == 1.0);
        CHECK(m.atoms()[0].weight == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(state.entries()[k - 1].route == SolverRoute::Cmim);
    }
}

TEST_CASE("advance: CRRA chain under Black-Scholes gains the closed-form coefficient") {
    PfppState state = PfppState::initial(crra2(), 0.0);
    state = state.advance(bs_03);
    const double c = std::exp(0.01125);
    CHECK(state.inverse_marginal(1).measure().atoms()[0].weight ==
          doctest::Approx(c).epsilon(1e-13));
    state = state.advance(bs_03);
    CHECK(state.inverse_marginal(2).measure().atoms()[0].weight ==
          doctest::Approx(c * c).epsilon(1e-13));
}

TEST_CASE("advance: physical = risk-neutral binomial leaves the state unchanged") {
    PfppState state = PfppState::initial(crra2(), 0.0).advance(degenerate_binomial());
    CHECK(state.inverse_marginal(1).measure().atoms()[0].weight ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(state.anchor(1) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("advance: residual gate and route preconditions") {
    AdvanceOptions strict;
    strict.residual_tol_cmim = 1e-18;
    RiskAversionMeasure with_cell({{2.0, 0.5}}, {{1.8, 2.2, 0.4}}, 1.2, 3.2);
    PfppState state = PfppState::initial(InverseMarginal::from_measure(with_cell), 0.0);
    CHECK_THROWS_AS(state.advance(bs_03, strict), ConstructionFailedError);

    // grid-backed tip cannot take the closed-form route
    std::vector<double> t, j;
    for (int i = -64; i <= 64; ++i) {
        t.push_back(0.1 * i);
        j.push_back(std::exp(-0.05 * i));
    }
    PfppState grid_state = PfppState::initial(InverseMarginal::from_grid(t, j, 2.0, 2.0), 0.0);
    AdvanceOptions force_cmim;
    force_cmim.route = SolverRoute::Cmim;
    CHECK_THROWS_AS(grid_state.advance(bs_03, force_cmim), UnsupportedRouteError);
}

TEST_CASE("wealth step examples and monotone coupling") {
    PfppState log_state = PfppState::initial(log_marginal(), 0.0).advance(bs_03);
    CHECK(wealth_step(log_state, 1, 1.0, 2.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(wealth_step(log_state, 1, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));

    PfppState crra_state = PfppState::initial(crra2(), 0.0).advance(bs_03);
    CHECK(wealth_step(crra_state, 1, 1.0, 1.0) ==
          doctest::Approx(std::exp(0.01125)).epsilon(1e-12));

    PfppState mix_state = PfppState::initial(mixture(), 0.0).advance(bin_step);
    double prev = 1e300;
    for (double rho : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double x = wealth_step(mix_state, 1, 1.3, rho);
        CHECK(x < prev);
        CHECK(x > 0.0);
        prev = x;
    }
    CHECK(wealth_step(mix_state, 1, 1.0, 1.0) < wealth_step(mix_state, 1, 2.0, 1.0));
    CHECK_THROWS_AS(wealth_step(mix_state, 1, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS(wealth_step(mix_state, 2, 1.0, 1.0), DomainError);
}

TEST_CASE("utility reconstruction: log/BS closed form") {
    PfppState state = PfppState::initial(log_marginal(), 0.0).advance(bs_03);
    const UtilityCurve u1 = reconstruct_utility(state, 1, default_x_grid());
    CHECK(u1.value(1.0) == doctest::Approx(-0.045).epsilon(1e-10));
    for (double x : {0.3, 1.7, 42.0})
        CHECK(u1.value(x) == doctest::Approx(std::log(x) - 0.045).epsilon(1e-10));
}

TEST_CASE("utility reconstruction: degenerate kernel reproduces the previous curve") {
    PfppState state = PfppState::initial(mixture(), 0.25).advance(degenerate_binomial());
    const UtilityCurve u1 = reconstruct_utility(state, 1, default_x_grid());
    CHECK(state.anchor(1) == doctest::Approx(0.25).epsilon(1e-13));
    const UtilityCurve u0(state.inverse_marginal(0), state.anchor(0), default_x_grid());
    for (std::size_t i = 0; i < u0.xs().size(); i += 9)
        CHECK(u1.us()[i] == doctest::Approx(u0.us()[i]).epsilon(1e-12));
}

TEST_CASE("utility curve derivative matches the inverse marginal") {
    PfppState state = PfppState::initial(crra2(), 0.0).advance(bs_03);
    const UtilityCurve u1 = reconstruct_utility(state, 1, default_x_grid());
    for (double x : {0.2, 1.0, 3.7, 40.0}) {
        const double fd =
            oracles::central_difference([&](double v) { return u1.value(v); }, x, 1e-5);
        CHECK(std::abs(fd - u1.marginal(x)) / u1.marginal(x) < 1e-6);
    }
}

TEST_CASE("utility curve is increasing and concave on the grid") {
    PfppState state = PfppState::initial(mixture(), 0.0).advance(bin_step).advance(bs_03);
    for (std::size_t k = 1; k <= 2; ++k) {
        const UtilityCurve curve = reconstruct_utility(state, k, default_x_grid());
        const auto& xs = curve.xs();
        const auto& us = curve.us();
        for (std::size_t i = 1; i < xs.size(); ++i) CHECK(us[i] > us[i - 1]);
        for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
            const double d1 = (us[i] - us[i - 1]) / (xs[i] - xs[i - 1]);
            const double d2 = (us[i + 1] - us[i]) / (xs[i + 1] - xs[i]);
            CHECK(d2 < d1 * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("convex dual identities") {
    // log utility: V(y) = -ln y - 1
    const UtilityCurve ulog(log_marginal(), 0.0, default_x_grid());
    CHECK(convex_dual(ulog, 1.0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(convex_dual(ulog, 2.5) == doctest::Approx(-std::log(2.5) - 1.0).epsilon(1e-12));

    // U(x) = 2 sqrt(x) - 2 has I(y) = y^{-2} (atom gamma = 1/2): V(y) = 1/y - 2
    const InverseMarginal isqrt =
        InverseMarginal::from_measure(RiskAversionMeasure({{0.5, 1.0}}, {}, 0.25, 1.0));
    const UtilityCurve usqrt(isqrt, 0.0, default_x_grid());
    CHECK(convex_dual(usqrt, 1.0) == doctest::Approx(-1.0).epsilon(1e-12));
    for (double y : {0.4, 1.9, 7.0})
        CHECK(convex_dual(usqrt, y) == doctest::Approx(1.0 / y - 2.0).epsilon(1e-11));

    // V' = -I by finite differences; V''(1) = -I'(1) = 1 for the log case
    for (double y : {0.5, 1.0, 2.0}) {
        const double vd =
            oracles::central_difference([&](double v) { return convex_dual(ulog, v); }, y, 1e-5);
        CHECK(std::abs(vd + ulog.backing().value(y)) / ulog.backing().value(y) < 1e-6);
    }
    const double h = 1e-4;
    const double v2 = (convex_dual(ulog, 1.0 + h) - 2.0 * convex_dual(ulog, 1.0) +
                       convex_dual(ulog, 1.0 - h)) /
                      (h * h);
    CHECK(v2 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("martingale condition across backends") {
    const auto x_grid = default_x_grid(40);

    PfppState log_state = PfppState::initial(log_marginal(), 0.0).advance(bs_03);
    CHECK(verify_martingale(log_state, 1, x_grid) < 1e-10);

    PfppState bin_state = PfppState::initial(crra2(), 0.0)
                              .advance(BinomialPeriodParams{{{1.2, 0.9, 0.6}, {1.1, 0.95, 0.5}}});
    CHECK(verify_martingale(bin_state, 1, x_grid) < 1e-9);

    PfppState mix_state = PfppState::initial(mixture(), 0.0).advance(bs_03);
    CHECK(verify_martingale(mix_state, 1, x_grid) < 1e-7);

    // corrupting I_1 by 2% moves the deviation to the same order
    const RiskAversionMeasure& good = mix_state.inverse_marginal(1).measure();
    std::vector<Atom> atoms = good.atoms();
    for (Atom& a : atoms) a.weight *= 1.02;
    std::vector<PeriodEntry> entries = mix_state.entries();
    entries[0].inverse_marginal = InverseMarginal::from_measure(
        RiskAversionMeasure(atoms, good.cells(), good.gamma_min(), good.gamma_max()));
    PfppState corrupted =
        PfppState::from_parts(mix_state.inverse_marginal(0), mix_state.anchor(0), entries);
    CHECK(verify_martingale(corrupted, 1, x_grid) > 1e-3);
}

TEST_CASE("budget condition across backends") {
    const auto y_grid = default_y_grid(60);
    PfppState log_state = PfppState::initial(log_marginal(), 0.0).advance(bin_step);
    CHECK(verify_budget(log_state, 1, y_grid) < 1e-14);

    PfppState bin_state = PfppState::initial(crra2(), 0.0).advance(bin_step);
    CHECK(verify_budget(bin_state, 1, y_grid) < 1e-13);

    PfppState mix_state = PfppState::initial(mixture(), 0.0).advance(bs_03);
    CHECK(verify_budget(mix_state, 1, y_grid) < 1e-9);
}

TEST_CASE("supermartingale condition and the quadratic gap law") {
    PfppState state = PfppState::initial(log_marginal(), 0.0).advance(bs_03);

    // eps = 0: the optimum attains the bound
    CHECK(std::abs(supermartingale_gap(state, 1, 1.0, 0.1, 1.0, 0.0, 0.0)) < 1e-12);

    RngStream rng = RngStream::keyed(2024, 0, 0);
    CHECK(verify_supermartingale(state, 1, 1.0, 100, rng, 0.1));

    // gap ~ eps^2: fitted exponent within 2 +- 0.1
    const double a = 0.15, b = 1.2, c = 0.1;
    const double g1 = supermartingale_gap(state, 1, 1.0, a, b, c, 0.02);
    const double g2 = supermartingale_gap(state, 1, 1.0, a, b, c, 0.04);
    const double g3 = supermartingale_gap(state, 1, 1.0, a, b, c, 0.08);
    CHECK(g1 > 0.0);
    const double p12 = std::log(g2 / g1) / std::log(2.0);
    const double p23 = std::log(g3 / g2) / std::log(2.0);
    CHECK(std::abs(p12 - 2.0) < 0.1);
    CHECK(std::abs(p23 - 2.0) < 0.1);

    PfppState mix_state = PfppState::initial(mixture(), 0.0).advance(bin_step);
    RngStream rng2 = RngStream::keyed(2025, 0, 0);
    CHECK(verify_supermartingale(mix_state, 1, 1.0, 100, rng2, 0.1));
}

TEST_CASE("forward consistency: full-tree budget identity over several periods") {
    // 3 periods x 2 sub-steps: enumerate all kernel outcomes exactly
    const std::vector<ThetaBlock> thetas = {
        BinomialPeriodParams{{{1.2, 0.9, 0.6}, {1.15, 0.9, 0.55}}},
        BinomialPeriodParams{{{1.25, 0.8, 0.5}, {1.1, 0.95, 0.4}}},
        BinomialPeriodParams{{{1.3, 0.85, 0.65}, {1.2, 0.9, 0.35}}}};
    PfppState state = PfppState::initial(mixture(), 0.0);
    for (const ThetaBlock& theta : thetas) state = state.advance(theta);

    const double x0 = 1.7;
    double expectation = 0.0;
    std::function<void(std::size_t, double, double, double)> walk =
        [&](std::size_t k, double zx, double prob, double x) {
            if (k == state.period()) {
                expectation += prob * zx * x;
                return;
            }
            for (const DiscreteAtom& atom : state.entries()[k].law.discrete().atoms) {
                const double x_next = wealth_step(state, k + 1, x, atom.rho);
                walk(k + 1, zx * atom.rho, prob * atom.prob, x_next);
            }
        };
    walk(0, 1.0, 1.0, x0);
    CHECK(expectation == doctest::Approx(x0).epsilon(1e-12));
}

TEST_CASE("numeraire invariance for CRRA states") {
    PfppState state = PfppState::initial(crra2(), 0.0).advance(bs_03).advance(bin_step);
    const double c = 3.7;
    for (double rho1 : {0.6, 1.4}) {
        for (double rho2 : {5.0 / 9.0, 5.0 / 3.0}) {
            const double x1 = wealth_step(state, 1, 1.0, rho1);
            const double x2 = wealth_step(state, 2, x1, rho2);
            const double x1c = wealth_step(state, 1, c, rho1);
            const double x2c = wealth_step(state, 2, x1c, rho2);
            CHECK(x2c == doctest::Approx(c * x2).epsilon(1e-11));
        }
    }
}

TEST_CASE("state accessors validate period indices") {
    PfppState state = PfppState::initial(log_marginal(), 0.0);
    CHECK_THROWS_AS(state.inverse_marginal(1), DomainError);
    CHECK_THROWS_AS(reconstruct_utility(state, 1, default_x_grid()), DomainError);
    CHECK(state.anchor(0) == 0.0);
}
