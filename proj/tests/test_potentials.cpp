#include <gtest/gtest.h>

#include <cmath>

#include <potentia/potentials.hpp>
#include <potentia/simulator.hpp>

using namespace potentia;

namespace {

// Same oracle as the simulator tests: Exp(beta) claims, drift a.
double cl_exp_discounted(double lambda, double a, double beta, double q, double x) {
    const double b = a * beta - lambda - q;
    const double R = (b + std::sqrt(b * b + 4 * a * q * beta)) / (2 * a);
    return (beta - R) / beta * std::exp(-R * x);
}

RiskProcessSpec expkill_spec(TailModel F, SmallComponent small, double mu, PayoffFn l) {
    RiskProcessSpec s;
    s.claims = ClaimModel::univariate(std::move(F));
    s.small = std::move(small);
    s.kill = KillingSpec::exp_kill(mu);
    s.payoff = std::move(l);
    return s;
}

}  // namespace

TEST(DiscountedRuin, ExponentialClosedForm) {
    for (double q : {0.05, 0.5}) {
        auto p = discounted_ruin_problem(1, TailModel::exponential(1), 2, q, 0.02, 30);
        auto s = solve_fixed_point(p, 1e-11);
        EXPECT_TRUE(s.valid);
        for (double x : {0.0, 1.0, 2.0, 5.0}) {
            const double ref = cl_exp_discounted(1, 2, 1, q, x);
            EXPECT_NEAR(s.at(x) / ref, 1.0, 2e-3) << q << ' ' << x;
        }
    }
}

TEST(ExpKillForcing, ConstantPayoff) {
    const auto l = PayoffFn::constant(2);
    EXPECT_NEAR(expkill_forcing(l, 1, SmallComponent::drift_only({1}), 0.5, 3.0), 2 / 1.5, 1e-12);
    EXPECT_NEAR(expkill_forcing(l, 1, SmallComponent::drift_brownian({0.3}, 1.2), 0.5, -1.0), 2 / 1.5, 1e-9);
}

TEST(ExpKillForcing, DriftOnlyIndicatorClosedForm) {
    // int_0^inf e^{-c s} 1{x + a s in [-1, 1]} ds for x = -3, a = 2, c = 2.
    const double v = expkill_forcing(PayoffFn::indicator_ball(1.0), 1, SmallComponent::drift_only({2}), 1, -3.0);
    EXPECT_NEAR(v, (std::exp(-2.0) - std::exp(-4.0)) / 2, 1e-12);
}

TEST(ExpKillPotential, ConstantPayoffIsExactWithHoldBoundaries) {
    auto p = expkill_potential_problem(1, TailModel::pareto(1, 1, 1), SmallComponent::drift_only({1}), 0.5,
                                       PayoffFn::constant(1), 0.25, -5, 5, {Boundary::Hold, Boundary::Hold});
    auto s = solve_fixed_point(p, 1e-10);
    for (double u : s.u) EXPECT_NEAR(u, 2.0, 1e-4);
}

TEST(ExpKillPotential, AgreesWithSimulation) {
    const std::vector<SmallComponent> smalls = {SmallComponent::drift_only({1}),
                                                SmallComponent::drift_brownian({0.5}, 1.0)};
    const auto F = TailModel::pareto(1, 1, 1);
    const auto l = PayoffFn::indicator_ball(1.0);
    const Vec xs = {-2.0, 0.0, 3.0, 10.0};
    for (const auto& small : smalls) {
        auto p = expkill_potential_problem(1, F, small, 1, l, 0.1, -20, 60, {});
        auto s = solve_fixed_point(p, 1e-10);
        McOptions o;
        o.n_paths = 40000;
        std::vector<Vec> pts;
        for (double x : xs) pts.push_back({x});
        auto mc = estimate_potential_expkill(expkill_spec(F, small, 1, l), pts, o);
        for (std::size_t k = 0; k < xs.size(); ++k)
            EXPECT_TRUE(mc[k].within(s.at(xs[k]), 3, 0.01 * s.at(xs[k])))
                << small.name() << " x=" << xs[k] << " solver " << s.at(xs[k]) << " mc " << mc[k].estimate
                << " +- " << mc[k].std_error;
    }
}
