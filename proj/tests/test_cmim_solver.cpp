#include "pfpp/cmim_solver.hpp"
#include "pfpp/errors.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace pfpp;

namespace {

KernelLaw binomial_law() { return kernel_from_binomial({{{1.2, 0.9, 0.6}}}); }
KernelLaw lognormal_law(double s2) { return kernel_from_bs({{std::sqrt(s2)}, {}}); }

} // namespace

TEST_CASE("log utility atom is invariant under any law") {
    RiskAversionMeasure m({{1.0, 0.7}}, {}, 0.5, 2.0);
    for (const KernelLaw& law : {binomial_law(), lognormal_law(0.09)}) {
        const RiskAversionMeasure out = solve_period(m, law);
        CHECK(out.atoms()[0].weight == doctest::Approx(0.7).epsilon(1e-14));
        CHECK(out.atoms()[0].gamma == 1.0);
    }
}

TEST_CASE("CRRA atom under the lognormal law gains the closed-form factor") {
    RiskAversionMeasure m({{2.0, 1.0}}, {}, 1.0, 3.0);
    const RiskAversionMeasure out = solve_period(m, lognormal_law(0.09));
    // 1 / E[rho^{1/2}] = exp(0.09 * (1 - 1/2) / (2*2)) = exp(0.01125)
    CHECK(out.atoms()[0].weight == doctest::Approx(1.0113135192236114).epsilon(1e-13));
    // independent trapezoid oracle for the moment
    const double oracle = 1.0 / oracles::lognormal_moment_trapezoid(0.09, 0.5);
    CHECK(out.atoms()[0].weight == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("CRRA atom under the binomial law") {
    RiskAversionMeasure m({{2.0, 1.0}}, {}, 1.0, 3.0);
    const RiskAversionMeasure out = solve_period(m, binomial_law());
    const double expected =
        1.0 / (0.6 * std::sqrt(5.0 / 9.0) + 0.4 * std::sqrt(5.0 / 3.0));
    CHECK(out.atoms()[0].weight == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("solve residual is tiny; degenerate law gives zero; corruption shows up") {
    RiskAversionMeasure m({{1.6, 0.4}, {2.7, 0.35}}, {{1.9, 2.15, 0.8}}, 1.3, 3.2);
    const auto grid = default_y_grid();

    for (const KernelLaw& law : {binomial_law(), lognormal_law(0.09)}) {
        const RiskAversionMeasure out = solve_period(m, law);
        CHECK(period_residual(out, m, law, grid).max_rel_err < 1e-9);
    }

    const KernelLaw unit = kernel_from_bs({{0.0}, {}});
    CHECK(period_residual(m, m, unit, grid).max_rel_err == 0.0);

    // doubling all weights makes the residual the order of the perturbation
    RiskAversionMeasure doubled({{1.6, 0.8}, {2.7, 0.7}}, {{1.9, 2.15, 1.6}}, 1.3, 3.2);
    const double bad = period_residual(doubled, m, binomial_law(), grid).max_rel_err;
    CHECK(bad > 0.5);
    CHECK(bad < 2.0);
}

TEST_CASE("integrability precondition is enforced") {
    RiskAversionMeasure m({{2.0, 1.0}}, {}, 0.4, 3.0);
    CHECK_THROWS_AS(solve_period(m, lognormal_law(3600.0)), PreconditionError);
}

TEST_CASE("gamma = 1 atom weight is a fixed point in mixtures") {
    RiskAversionMeasure m({{1.0, 0.25}, {2.0, 0.75}}, {}, 0.5, 3.0);
    for (const KernelLaw& law : {binomial_law(), lognormal_law(0.25)}) {
        const RiskAversionMeasure out = solve_period(m, law);
        CHECK(out.atoms()[0].weight == doctest::Approx(0.25).epsilon(1e-14));
    }
}

TEST_CASE("composition: two solves equal the per-atom factor product") {
    RiskAversionMeasure m({{1.4, 0.5}, {2.3, 0.8}}, {}, 1.1, 3.0);
    const KernelLaw a = binomial_law();
    const KernelLaw b = lognormal_law(0.16);
    const RiskAversionMeasure two_step = solve_period(solve_period(m, a), b);
    for (std::size_t i = 0; i < m.atoms().size(); ++i) {
        const double g = m.atoms()[i].gamma;
        const double factor =
            1.0 / (moment(a, 1.0 - 1.0 / g) * moment(b, 1.0 - 1.0 / g));
        CHECK(two_step.atoms()[i].weight ==
              doctest::Approx(m.atoms()[i].weight * factor).epsilon(1e-13));
    }
}

TEST_CASE("support is preserved") {
    RiskAversionMeasure m({{1.6, 0.4}}, {{1.9, 2.3, 0.5}}, 1.3, 3.0);
    const RiskAversionMeasure out = solve_period(m, lognormal_law(0.09));
    REQUIRE(out.atoms().size() == 1);
    CHECK(out.atoms()[0].gamma == 1.6);
    CHECK(out.cells().front().lo == doctest::Approx(1.9).epsilon(1e-15));
    CHECK(out.cells().back().hi == doctest::Approx(2.3).epsilon(1e-15));
    // contiguous cover with no gaps
    for (std::size_t i = 1; i < out.cells().size(); ++i)
        CHECK(out.cells()[i].lo == doctest::Approx(out.cells()[i - 1].hi).epsilon(1e-15));
}

TEST_CASE("uniqueness within the class: equal values on a grid pin the weights") {
    // Solve for weights from 50 log-spaced samples of I; the recovered
    // weights must match the generating ones (Laplace-Stieltjes uniqueness).
    const std::vector<double> gammas = {1.5, 1.9, 2.4, 3.0};
    const std::vector<double> weights = {0.3, 0.2, 0.35, 0.15};
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < gammas.size(); ++i) atoms.push_back({gammas[i], weights[i]});
    RiskAversionMeasure m(atoms, {}, 1.2, 3.3);

    const auto ys = default_y_grid(50);
    std::vector<std::vector<double>> a(ys.size(), std::vector<double>(gammas.size()));
    std::vector<double> b(ys.size());
    for (std::size_t r = 0; r < ys.size(); ++r) {
        for (std::size_t c = 0; c < gammas.size(); ++c)
            a[r][c] = std::pow(ys[r], -1.0 / gammas[c]);
        b[r] = cmim_eval(m, ys[r]);
    }
    const auto solved = oracles::least_squares(a, b);
    for (std::size_t c = 0; c < gammas.size(); ++c)
        CHECK(solved[c] == doctest::Approx(weights[c]).epsilon(1e-8));
}

TEST_CASE("finiteness check accepts CMIM outputs and rejects a blow-up grid") {
    const auto grid = default_y_grid(40);
    RiskAversionMeasure m({{1.5, 0.5}, {2.5, 0.5}}, {}, 1.1, 3.0);
    const InverseMarginal good =
        InverseMarginal::from_measure(solve_period(m, binomial_law()));
    CHECK(finiteness_check(good, binomial_law(), grid));
    const InverseMarginal good2 =
        InverseMarginal::from_measure(solve_period(m, lognormal_law(0.09)));
    CHECK(finiteness_check(good2, lognormal_law(0.09), grid));

    // I(y) = exp(1/y) sampled: grows faster than every power at 0, so the
    // expectation against a wide lognormal overflows at small y.
    std::vector<double> t, j;
    for (int i = -512; i < 512; ++i) {
        const double ti = 6.375 * static_cast<double>(i) / 512.0;
        t.push_back(ti);
        j.push_back(std::exp(std::exp(-ti)));
    }
    const InverseMarginal blowup = InverseMarginal::from_grid(t, j, 0.8, 3.0);
    CHECK_FALSE(finiteness_check(blowup, lognormal_law(4.0), default_y_grid(20, 1e-80, 1e-50)));
}

TEST_CASE("residual report emits csv rows") {
    RiskAversionMeasure m({{2.0, 1.0}}, {}, 1.0, 3.0);
    const PeriodSolve solve = solve_period_checked(m, binomial_law(), default_y_grid(5));
    const std::string csv = solve.residual_report.to_csv();
    CHECK(csv.substr(0, 18) == "y,lhs,rhs,rel_err\n");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}
