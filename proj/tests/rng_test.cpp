#include <gtest/gtest.h>

#include <array>
#include <random>
#include <set>

#include <shotnoise/rng.hpp>

using shotnoise::Philox4x32;

// Known-answer vectors of the Random123 reference implementation.
TEST(Philox, KnownAnswers) {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    EXPECT_EQ(Philox4x32::bijection(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::bijection(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
              (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::bijection(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
              (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
    Philox4x32 a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    std::set<std::uint32_t> firsts;
    for (int i = 0; i < 1000; ++i) {
        auto va = a();
        EXPECT_EQ(va, b());
        if (i == 0) {
            firsts.insert(va);
            firsts.insert(c());
            firsts.insert(d());
        }
    }
    EXPECT_EQ(firsts.size(), 3u);
}

TEST(Philox, UniformBucketsPassChiSquare) {
    Philox4x32 g(1, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    constexpr int kBuckets = 64;
    constexpr int kDraws = 640000;
    std::array<int, kBuckets> count{};
    for (int i = 0; i < kDraws; ++i) ++count[static_cast<int>(u(g) * kBuckets)];
    double chi2 = 0.0;
    const double expect = double(kDraws) / kBuckets;
    for (int c : count) chi2 += (c - expect) * (c - expect) / expect;
    // 63 degrees of freedom: the 0.999 quantile is about 103.4
    EXPECT_LT(chi2, 103.4);
}
