#include <gtest/gtest.h>

#include <cmath>

#include <potentia/simulator.hpp>

using namespace potentia;

namespace {

// Cramér–Lundberg with Exp(beta) claims: psi(x) = (lambda / (a beta)) e^{-(beta - lambda/a) x}.
double cl_exp_ruin(double lambda, double a, double beta, double x) {
    return lambda / (a * beta) * std::exp(-(beta - lambda / a) * x);
}

// E[e^{-qT}; T < inf] for Exp(beta) claims: A e^{-R x} with R the positive root
// of a R^2 - (a beta - lambda - q) R - q beta = 0 and A = (beta - R) / beta.
double cl_exp_discounted(double lambda, double a, double beta, double q, double x) {
    const double b = a * beta - lambda - q;
    const double R = (b + std::sqrt(b * b + 4 * a * q * beta)) / (2 * a);
    return (beta - R) / beta * std::exp(-R * x);
}

RiskProcessSpec cl_spec(double a = 2.0) {
    RiskProcessSpec s;
    s.lambda = 1;
    s.claims = ClaimModel::univariate(TailModel::exponential(1));
    s.small = SmallComponent::drift_only({a});
    s.kill = KillingSpec::first_passage();
    s.delta = 0;
    return s;
}

}  // namespace

TEST(SamplePath, PoissonCountAndDrift) {
    RiskProcessSpec s = cl_spec();
    const double H = 50;
    const int n = 4000;
    double sum = 0, sum2 = 0;
    for (int p = 0; p < n; ++p) {
        PathStream rng(3, p);
        auto sk = sample_path(s, rng, H);
        sum += sk.times.size();
        sum2 += double(sk.times.size()) * sk.times.size();
        for (std::size_t i = 0; i < sk.times.size(); ++i) EXPECT_LT(sk.after[i][0], sk.before[i][0]);
    }
    const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, s.lambda * H, 3 * se);

    s.lambda = 1e-3;
    s.x = {1.5};
    for (int p = 0; p < 50; ++p) {
        PathStream rng(3, p);
        auto sk = sample_path(s, rng, 2.0);
        if (sk.times.empty()) {
            EXPECT_DOUBLE_EQ(sk.end[0], 1.5 + 2 * 2.0);
        }
    }
}

TEST(SamplePath, Repeatable) {
    auto s = cl_spec();
    PathStream a(9, 4), b(9, 4);
    auto p = sample_path(s, a, 30), q = sample_path(s, b, 30);
    EXPECT_EQ(p.times, q.times);
    EXPECT_EQ(p.after, q.after);
    EXPECT_EQ(p.end, q.end);
}

TEST(RunningStats, MatchesTwoPass) {
    std::vector<double> xs;
    for (int i = 0; i < 5000; ++i) xs.push_back(std::sin(i * 0.37) + 0.001 * i);
    auto st = run_paths(xs.size(), 1, 3, [&](std::uint64_t p, std::span<double> out) { out[0] = xs[p]; });
    double m = 0;
    for (double v : xs) m += v;
    m /= xs.size();
    double v2 = 0;
    for (double v : xs) v2 += (v - m) * (v - m);
    v2 /= xs.size() - 1;
    EXPECT_NEAR(st.mean[0], m, 1e-12);
    EXPECT_NEAR(st.std_error(0), std::sqrt(v2 / xs.size()), 1e-12);
}

TEST(Potential, ConstantPayoffGivesInverseRate) {
    RiskProcessSpec s;
    s.claims = ClaimModel::univariate(TailModel::pareto(1, 1, 1));
    s.small = SmallComponent::drift_only({1});
    s.kill = KillingSpec::exp_kill(0.5);
    s.payoff = PayoffFn::constant(3);
    McOptions o;
    o.n_paths = 20000;
    auto r = estimate_potential_expkill(s, {{0.0}, {10.0}}, o);
    for (const auto& e : r) EXPECT_TRUE(e.within(6.0)) << e.estimate << " +- " << e.std_error;
}

TEST(Potential, BoundedBySupOverMu) {
    RiskProcessSpec s;
    s.claims = ClaimModel::univariate(TailModel::pareto(1, 1, 1));
    s.small = SmallComponent::drift_only({1});
    s.kill = KillingSpec::exp_kill(1);
    s.payoff = PayoffFn::indicator_ball(2.0);
    McOptions o;
    o.n_paths = 20000;
    for (const auto& e : estimate_potential_expkill(s, {{-1.0}, {0.0}, {1.5}, {5.0}}, o))
        EXPECT_LE(e.estimate, s.payoff.sup() / s.kill.mu + 3 * e.std_error);
}

TEST(Potential, DriftOnlyIndicatorClosedForm) {
    // No claims can move the path into [r, inf) from above it; with lambda
    // tiny the path is x + t and u(x) = int_0^inf e^{-mu t} 1{x + t >= r} dt.
    RiskProcessSpec s;
    s.lambda = 1e-9;
    s.claims = ClaimModel::univariate(TailModel::exponential(1));
    s.small = SmallComponent::drift_only({1});
    s.kill = KillingSpec::exp_kill(2);
    s.payoff = PayoffFn::indicator_quadrant(1.0);
    McOptions o;
    o.n_paths = 40000;
    auto r = estimate_potential_expkill(s, {{0.0}, {0.5}}, o);
    EXPECT_TRUE(r[0].within(std::exp(-2.0) / 2)) << r[0].estimate;
    EXPECT_TRUE(r[1].within(std::exp(-1.0) / 2)) << r[1].estimate;
}

TEST(Ruin1d, ExponentialClosedForm) {
    auto s = cl_spec();
    McOptions o;
    o.n_paths = 100000;
    o.seed = 11;
    const Vec xs = {0, 1, 2, 4};
    auto r = estimate_ruin_1d(s, xs, o);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        EXPECT_TRUE(r[k].within(cl_exp_ruin(1, 2, 1, xs[k]))) << xs[k] << ' ' << r[k].estimate;
        EXPECT_LT(r[k].bias_proxy, 0.02);
        if (k) {
            EXPECT_LE(r[k].estimate, r[k - 1].estimate);
        }
    }
}

TEST(Ruin1d, NetProfitViolation) {
    auto s = cl_spec(0.9);
    EXPECT_THROW(estimate_ruin_1d(s, {0.0}, McOptions{}), std::invalid_argument);
}

TEST(Ruin1d, ThreadCountDoesNotChangeResult) {
    auto s = cl_spec();
    McOptions o;
    o.n_paths = 20000;
    o.horizon = 40;
    o.threads = 1;
    auto a = estimate_ruin_1d(s, {0, 2}, o);
    o.threads = 4;
    auto b = estimate_ruin_1d(s, {0, 2}, o);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].estimate, b[k].estimate);
        EXPECT_EQ(a[k].std_error, b[k].std_error);
    }
}

TEST(Ruin1d, BrownianPerturbationRaisesRuin) {
    auto s = cl_spec();
    McOptions o;
    o.n_paths = 20000;
    o.horizon = 60;
    o.step = 0.1;
    const auto base = estimate_ruin_1d(s, {1.0}, o);
    s.small = SmallComponent::drift_brownian({2.0}, 0.5);
    s.delta = 1;
    const auto noisy = estimate_ruin_1d(s, {1.0}, o);
    EXPECT_GT(noisy[0].estimate, base[0].estimate);
}

TEST(Dual, ExponentialClosedForm) {
    McOptions o;
    o.n_paths = 100000;
    auto r = estimate_ruin_dual(1, 2, TailModel::exponential(1), {0, 1, 2}, o);
    for (const auto& e : r) EXPECT_TRUE(e.within(cl_exp_ruin(1, 2, 1, e.x[0]))) << e.x[0] << ' ' << e.estimate;
}

TEST(Dual, AgreesWithRiskProcess) {
    McOptions o;
    o.n_paths = 50000;
    auto F = TailModel::pareto(1, 1.5, 1);
    RiskProcessSpec s;
    s.claims = ClaimModel::univariate(F);
    s.small = SmallComponent::drift_only({2 * F.mean()});
    auto direct = estimate_ruin_1d(s, {0, 2}, o);
    auto dual = estimate_ruin_dual(1, 2 * F.mean(), F, {0, 2}, o);
    for (std::size_t k = 0; k < 2; ++k)
        EXPECT_LE(std::abs(direct[k].estimate - dual[k].estimate),
                  3 * combined_sigma(direct[k], dual[k]) + direct[k].bias_proxy * direct[k].estimate);
}

TEST(QuadrantRuin, EstimatorsAgree) {
    RiskProcessSpec s;
    s.claims = ClaimModel::comonotone_split(TailModel::pareto(1, 1, 1), {0.4, 0.6});
    s.small = SmallComponent::drift_only({2.0, 1.8});
    s.kill = KillingSpec::quadrant_exit();
    s.x = {0, 0};
    McOptions o;
    o.n_paths = 20000;
    auto r = estimate_quadrant_ruin(s, {{1, 2}, {3, 3}}, o);
    for (std::size_t k = 0; k < 2; ++k)
        EXPECT_LE(std::abs(r.direct[k].estimate - r.compensation[k].estimate),
                  3 * combined_sigma(r.direct[k], r.compensation[k]))
            << r.direct[k].estimate << " vs " << r.compensation[k].estimate;
}

TEST(QuadrantRuin, ReducesToOneDimension) {
    RiskProcessSpec s;
    s.claims = ClaimModel::independent_product({TailModel::exponential(1), TailModel::exponential(1)});
    s.small = SmallComponent::drift_only({2.0, 2.0});
    s.kill = KillingSpec::quadrant_exit();
    s.x = {0, 0};
    s.delta = 0;
    McOptions o;
    o.n_paths = 40000;
    auto r = estimate_quadrant_ruin(s, {{1, 1e6}, {0, 0}}, o);
    EXPECT_TRUE(r.direct[0].within(cl_exp_ruin(1, 2, 1, 1), 3, r.direct[0].bias_proxy * r.direct[0].estimate))
        << r.direct[0].estimate;
    EXPECT_TRUE(r.compensation[0].within(cl_exp_ruin(1, 2, 1, 1), 3, 0.02 * r.direct[0].estimate))
        << r.compensation[0].estimate;
    // Either coordinate alone already ruins with probability psi(0).
    EXPECT_GE(r.direct[1].estimate + 3 * r.direct[1].std_error, cl_exp_ruin(1, 2, 1, 0));
}

TEST(GerberShiu, UnitPenaltyWithoutDiscountIsRuin) {
    auto s = cl_spec();
    McOptions o;
    o.n_paths = 50000;
    auto gs = estimate_gerber_shiu(s, Penalty::one(), 0.0, {0.0, 2.0}, o);
    auto ruin = estimate_ruin_1d(s, {0.0, 2.0}, o);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_EQ(gs.direct[k].estimate, ruin[k].estimate);
        EXPECT_LE(std::abs(gs.direct[k].estimate - gs.potential[k].estimate),
                  3 * combined_sigma(gs.direct[k], gs.potential[k]));
    }
}

TEST(GerberShiu, DiscountedExponentialClosedForm) {
    auto s = cl_spec();
    McOptions o;
    o.n_paths = 100000;
    const double q = 0.1;
    auto gs = estimate_gerber_shiu(s, Penalty::one(), q, {0.0, 1.0}, o);
    for (std::size_t k = 0; k < 2; ++k) {
        const double ref = cl_exp_discounted(1, 2, 1, q, gs.direct[k].x[0]);
        EXPECT_TRUE(gs.direct[k].within(ref)) << gs.direct[k].estimate << " vs " << ref;
        EXPECT_TRUE(gs.potential[k].within(ref)) << gs.potential[k].estimate << " vs " << ref;
    }
    EXPECT_NEAR(cl_exp_discounted(1, 2, 1, 0, 1.3), cl_exp_ruin(1, 2, 1, 1.3), 1e-15);
}

TEST(GerberShiu, DeficitPenaltyMonotone) {
    auto s = cl_spec();
    McOptions o;
    o.n_paths = 20000;
    double prev = kInf;
    for (double y : {0.0, 0.5, 1.0, 2.0}) {
        auto gs = estimate_gerber_shiu(s, Penalty::deficit_above(y), 0.0, {1.0}, o);
        EXPECT_LE(gs.direct[0].estimate, prev);
        prev = gs.direct[0].estimate;
        // Memoryless deficit: P(deficit > y | ruin) = e^{-y}.
        EXPECT_TRUE(gs.potential[0].within(cl_exp_ruin(1, 2, 1, 1) * std::exp(-y), 3, 0.01)) << y;
    }
}
