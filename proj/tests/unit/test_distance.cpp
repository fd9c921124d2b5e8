#include <gtest/gtest.h>

#include <sgmm/distance.hpp>
#include <sgmm/errors.hpp>

#include "test_support.hpp"

using namespace sgmm;

namespace {

double dist(std::vector<double> a, std::vector<double> b, DistanceCounter& c) {
    return squared_distance<double>(a, b, c);
}

} // namespace

TEST(SquaredDistance, Examples) {
    DistanceCounter c;
    EXPECT_EQ(dist({0, 0}, {0, 0}, c), 0.0);
    EXPECT_EQ(dist({1, 2}, {1, 2}, c), 0.0);
    EXPECT_EQ(dist({3, 4}, {0, 0}, c), 25.0);
    EXPECT_EQ(c.count(), 3u);
}

TEST(SquaredDistance, DimensionMismatchIsUsageError) {
    DistanceCounter c;
    EXPECT_THROW(dist({1, 2, 3}, {1, 2}, c), usage_error);
    EXPECT_EQ(c.count(), 0u);
}

TEST(SquaredDistance, UncountedOverloadLeavesCounterAlone) {
    std::vector<double> a{1, 2, 3, 4, 5}, b{0, 0, 0, 0, 0};
    EXPECT_EQ(squared_distance<double>(a, b), 55.0);
}

TEST(SquaredDistance, MatchesNaiveSumOnRandomVectors) {
    auto rng = oracle::test_rng(1);
    DistanceCounter c;
    for (std::size_t trial = 0; trial < 200; ++trial) {
        const std::size_t D = 1 + rng.uniform_index(23);
        auto a = oracle::random_matrix(rng, 1, D, 3.0);
        auto b = oracle::random_matrix(rng, 1, D, 3.0);
        const double got = squared_distance<double>(a.row(0), b.row(0), c);
        const double want = oracle::naive_sq_dist(a.row(0), b.row(0));
        EXPECT_NEAR(got, want, 1e-12 * (1.0 + want));
        EXPECT_GE(got, 0.0);
        EXPECT_EQ(got, squared_distance<double>(b.row(0), a.row(0)));
    }
    EXPECT_EQ(c.count(), 200u);
}

TEST(DistanceCounter, MergeAndReset) {
    DistanceCounter a, b;
    a.add(3);
    b.add();
    a.merge(b);
    EXPECT_EQ(a.count(), 4u);
    a.reset();
    EXPECT_EQ(a.count(), 0u);
}
