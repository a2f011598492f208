#include <gtest/gtest.h>

#include <potentia/rng.hpp>

using potentia::Philox4x64;
using potentia::PathStream;

// Reference outputs from numpy.random.Philox (4x64, 10 rounds).
TEST(Philox, KnownAnswerZeroKey) {
    auto r = Philox4x64::apply({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(r[0], 0x16554d9eca36314cULL);
    EXPECT_EQ(r[1], 0xdb20fe9d672d0fdcULL);
    EXPECT_EQ(r[2], 0xd7e772cee186176bULL);
    EXPECT_EQ(r[3], 0x7e68b68aec7ba23bULL);
    r = Philox4x64::apply({1, 0, 0, 0}, {0, 0});
    EXPECT_EQ(r[0], 0x02f4ba6408e4d89bULL);
    EXPECT_EQ(r[1], 0x3dd62b0b9ca8c5b2ULL);
    EXPECT_EQ(r[2], 0x1c8667a55d902e79ULL);
    EXPECT_EQ(r[3], 0x907d7a052fd5b4dcULL);
    r = Philox4x64::apply({2, 0, 0, 0}, {0, 0});
    EXPECT_EQ(r[0], 0x809bf322883987c3ULL);
    EXPECT_EQ(r[3], 0xfc6ed66767a457bcULL);
}

TEST(Philox, KnownAnswerWithKey) {
    auto r = Philox4x64::apply({8, 0, 0, 0}, {0x1234, 0x5678});
    EXPECT_EQ(r[0], 0x5dd644f935bb9b87ULL);
    EXPECT_EQ(r[1], 0xbdd4dae5fdb5fe11ULL);
    EXPECT_EQ(r[2], 0x9dd0b3f2cfa8fecfULL);
    EXPECT_EQ(r[3], 0xb6620b220c5e458aULL);
}

TEST(PathStream, RepeatableAndIndependentOfOrder) {
    PathStream a(7, 3), b(7, 3), c(7, 4);
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        EXPECT_EQ(x, b());
        EXPECT_NE(x, c());
    }
}

TEST(PathStream, UniformMoments) {
    PathStream s(11, 0);
    const int n = 200000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sq += u * u;
    }
    EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
    EXPECT_NEAR(sq / n, 1.0 / 3, 0.005);
}

TEST(PathStream, NormalMoments) {
    PathStream s(5, 9);
    const int n = 200000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 4 / std::sqrt(n));
    EXPECT_NEAR(sq / n, 1.0, 0.02);
}
