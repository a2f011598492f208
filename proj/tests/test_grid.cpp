#include <gtest/gtest.h>

#include <cmath>

#include <potentia/grid.hpp>
#include <potentia/heavytail.hpp>

using namespace potentia;

namespace {

GridMeasure exp_measure(const Grid& g, double rate, double mass = 1.0) {
    return GridMeasure::from_tail(g, [&](double z) { return z <= 0 ? mass : mass * std::exp(-rate * z); }, mass);
}

}  // namespace

TEST(Grid, Construction) {
    auto g = Grid::uniform(0.01, 0, 40);
    EXPECT_EQ(g.size(), 4001u);
    EXPECT_DOUBLE_EQ(g.x_max(), 40.0);
    auto t = Grid::uniform(0.5, -20, 10);
    EXPECT_EQ(t.lo, -40);
    EXPECT_EQ(t.hi, 20);
    EXPECT_THROW(Grid::uniform(0, 0, 1), std::invalid_argument);
    EXPECT_THROW(Grid::uniform(1, 0, 0), std::invalid_argument);
}

TEST(GridMeasure, DiscretizationKeepsMass) {
    auto g = Grid::uniform(0.05, 0, 30);
    auto m = exp_measure(g, 1.0, 0.7);
    EXPECT_NEAR(m.mass(), 0.7, 1e-12);
    for (std::size_t i = 0; i < m.weight.size(); ++i) {
        EXPECT_GE(m.weight[i], 0.0);
        EXPECT_GE(m.left[i], 0.0);
        EXPECT_LE(m.left[i], m.weight[i]);
    }
    EXPECT_NEAR(m.above, 0.7 * std::exp(-30.0), 1e-18);
    // Tail at nodes is exact.
    for (double x : {0.0, 1.0, 2.5, 10.0}) EXPECT_NEAR(m.tail(x), 0.7 * std::exp(-x), 1e-10);
}

TEST(Convolve, DeltaIsIdentity) {
    auto g = Grid::uniform(0.1, 0, 20);
    auto b = exp_measure(g, 2.0);
    auto r = convolve(GridMeasure::delta(g), b);
    for (std::size_t i = 0; i < b.weight.size(); ++i) {
        EXPECT_EQ(r.weight[i], b.weight[i]);
        EXPECT_EQ(r.left[i], b.left[i]);
    }
    EXPECT_EQ(r.above, b.above);
}

TEST(Convolve, AtomsAddExactly) {
    auto g = Grid::uniform(0.5, 0, 10);
    auto r = convolve(GridMeasure::delta(g, 1.0), GridMeasure::delta(g, 2.0));
    ASSERT_EQ(r.atoms.size(), 1u);
    EXPECT_EQ(r.atoms[0].location, 3.0);
    EXPECT_EQ(r.atoms[0].mass, 1.0);
    EXPECT_EQ(r.grid_mass(), 0.0);
}

TEST(Convolve, OffGridAtomSplitsLinearly) {
    auto g = Grid::uniform(1.0, 0, 10);
    GridMeasure b(g);
    b.weight[2] = 1.0;
    b.left[2] = 0.5;
    auto r = convolve(GridMeasure::delta(g, 0.25), b);
    EXPECT_NEAR(r.weight[2], 0.75, 1e-15);
    EXPECT_NEAR(r.weight[3], 0.25, 1e-15);
    EXPECT_NEAR(r.mass(), 1.0, 1e-15);
}

TEST(Convolve, ExponentialSquaredIsGamma2) {
    const double h = 0.01;
    auto g = Grid::uniform(h, 0, 30);
    auto e = exp_measure(g, 1.0);
    auto r = convolve(e, e);
    double err = 0;
    for (std::size_t i = 1; i + 1 < r.weight.size(); ++i) {
        const double x = g.at(i);
        err = std::max(err, std::abs(r.weight[i] / h - x * std::exp(-x)));
    }
    EXPECT_LT(err, 1e-3);
    for (double x : {0.5, 2.0, 7.0}) EXPECT_NEAR(r.tail(x), (1 + x) * std::exp(-x), 1e-4);
}

TEST(Convolve, MassIsMultiplicative) {
    auto g = Grid::uniform(0.1, 0, 15);
    auto a = exp_measure(g, 0.3);  // a lot of mass beyond the extent
    auto b = GridMeasure::from_tail(g, [](double z) { return z < 1 ? 1.0 : 1.0 / (z * z); }, 1.0);
    auto r = convolve(a, b);
    EXPECT_NEAR(r.mass(), a.mass() * b.mass(), 1e-8);
    EXPECT_GT(r.clipped(), 0.0);
    EXPECT_EQ(r.lost, 0.0);
    EXPECT_GE(r.above_floor, g.x_max());
}

TEST(Convolve, GridMismatch) {
    auto a = GridMeasure::delta(Grid::uniform(0.1, 0, 1));
    auto b = GridMeasure::delta(Grid::uniform(0.2, 0, 1));
    EXPECT_THROW(convolve(a, b), std::invalid_argument);
}

TEST(Convolve, TwoSidedSupportIsTracked) {
    auto g = Grid::uniform(0.5, -5, 5);
    GridMeasure a(g), b(g);
    a.weight[18] = 1.0;  // x = 4
    a.left[18] = 0.5;
    b.weight[17] = 1.0;  // x = 3.5
    b.left[17] = 0.5;
    auto r = convolve(a, b);
    EXPECT_NEAR(r.above, 1.0, 1e-15);
    EXPECT_GE(r.above_floor, 5.0);
    auto back = convolve(r, GridMeasure::delta(g, -3.0));
    EXPECT_NEAR(back.mass(), 1.0, 1e-15);
}

TEST(ConvolutionPower, ZeroAndOne) {
    auto g = Grid::uniform(0.1, 0, 10);
    auto m = exp_measure(g, 1.0, 0.5);
    auto p0 = convolution_power(m, 0);
    ASSERT_EQ(p0.atoms.size(), 1u);
    EXPECT_EQ(p0.atoms[0].location, 0.0);
    EXPECT_EQ(p0.mass(), 1.0);
    auto p1 = convolution_power(m, 1);
    for (std::size_t i = 0; i < m.weight.size(); ++i) EXPECT_EQ(p1.weight[i], m.weight[i]);
    auto p3 = convolution_power(m, 3);
    EXPECT_NEAR(p3.mass(), 0.125, 1e-12);
}

TEST(NeumannSum, ZeroTermsAndMass) {
    auto g = Grid::uniform(0.1, 0, 60);
    auto k = exp_measure(g, 1.0, 0.5);
    auto n0 = neumann_sum(k, 0);
    ASSERT_EQ(n0.measure.atoms.size(), 1u);
    EXPECT_NEAR(n0.measure.atoms[0].mass, 0.5, 1e-15);
    for (int n : {1, 5, 20}) {
        auto r = neumann_sum(k, n);
        const double missing = 1.0 - r.measure.mass();
        EXPECT_GE(missing, -1e-12);
        EXPECT_LE(missing, r.truncation_bound + 1e-12);
    }
    EXPECT_THROW(neumann_sum(exp_measure(g, 1.0, 1.05), 3), std::invalid_argument);
}

TEST(NeumannSum, GeometricCompoundOfExponentials) {
    // (1-rho) sum rho^k Exp^{*k} has tail rho e^{-(1-rho) x}.
    auto g = Grid::uniform(0.02, 0, 60);
    const double rho = 0.5;
    auto k = exp_measure(g, 1.0, rho);
    auto r = neumann_sum(k, neumann_terms_for(rho, 1e-12));
    for (double x : {0.5, 2.0, 10.0}) EXPECT_NEAR(r.measure.tail(x), rho * std::exp(-(1 - rho) * x), 1e-5);
}
