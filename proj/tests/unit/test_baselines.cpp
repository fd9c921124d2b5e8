#include <gtest/gtest.h>

#include <algorithm>

#include <sgmm/afkmc2.hpp>
#include <sgmm/exact_em.hpp>
#include <sgmm/kmeans.hpp>
#include <sgmm/metrics.hpp>
#include <sgmm/synthetic.hpp>

#include "test_support.hpp"

using namespace sgmm;

TEST(KMeans, SeparableOneDimensionalInstance) {
    DataMatrix<double> data(Matrix<double>{{0.0}, {1.0}, {10.0}, {11.0}});
    // exhaustive oracle: best 2-partition of {0, 1, 10, 11}
    double best_q = 1e300;
    std::vector<double> best_centers;
    for (int mask = 1; mask < 15; ++mask) {
        double s[2] = {0, 0}, k[2] = {0, 0};
        for (int i = 0; i < 4; ++i) {
            const int g = (mask >> i) & 1;
            s[g] += data.row(i)[0];
            k[g] += 1;
        }
        double q = 0;
        for (int i = 0; i < 4; ++i) {
            const int g = (mask >> i) & 1;
            q += std::pow(data.row(i)[0] - s[g] / k[g], 2);
        }
        if (q < best_q) {
            best_q = q;
            best_centers = {std::min(s[0] / k[0], s[1] / k[1]), std::max(s[0] / k[0], s[1] / k[1])};
        }
    }
    const auto result = kmeans_fit(data, Matrix<double>{{0.0}, {1.0}}, 100, 1e-9);
    std::vector<double> got{result.centers(0, 0), result.centers(1, 0)};
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, best_centers);
    EXPECT_EQ(got, (std::vector<double>{0.5, 10.5}));
}

TEST(KMeans, DataPointsAsCentersIsAFixedPoint) {
    DataMatrix<double> data(Matrix<double>{{0.0, 1.0}, {3.0, 2.0}, {7.0, 7.0}});
    const auto result = kmeans_fit(data, data.values(), 50, 1e-3);
    EXPECT_EQ(result.trace.iterations, 1u);
    EXPECT_EQ(result.trace.objective.front(), 0.0);
    EXPECT_EQ(result.centers, data.values());
}

TEST(KMeans, SingleClusterIsCentroid) {
    DataMatrix<double> data(Matrix<double>{{0.0}, {2.0}, {7.0}});
    KMeans<double> model(data, Matrix<double>{{100.0}});
    model.step();
    EXPECT_DOUBLE_EQ(model.centers()(0, 0), 3.0);
}

TEST(KMeans, EmptyClusterKeepsCenter) {
    DataMatrix<double> data(Matrix<double>{{0.0}, {1.0}});
    KMeans<double> model(data, Matrix<double>{{0.5}, {100.0}});
    model.step();
    EXPECT_EQ(model.centers()(1, 0), 100.0);
}

TEST(KMeans, QuantizationErrorNonIncreasingAndCounted) {
    auto syn = generate_synthetic(2000, 12, 3, 1.0, 100);
    DistanceCounter c;
    const auto init = afkmc2_seed(syn.data, SeedingConfig{15, 5, 1}, c);
    KMeans<double> model(syn.data, init);
    double previous = 1e300;
    for (int t = 0; t < 15; ++t) {
        const double q_before = quantization_error(syn.data, model.centers());
        const auto stats = model.step();
        EXPECT_NEAR(stats.objective, q_before, 1e-9 * q_before);
        EXPECT_LE(stats.objective, previous * (1 + 1e-12));
        EXPECT_EQ(stats.estep_evals, 2000u * 15);
        previous = stats.objective;
    }
    EXPECT_EQ(model.fit_evals(), 15u * 2000 * 15);
}

TEST(KMeans, ThreadCountDoesNotChangeResult) {
    auto syn = generate_synthetic(4000, 10, 2, 1.0, 101);
    DistanceCounter c;
    const auto init = afkmc2_seed(syn.data, SeedingConfig{10, 5, 2}, c);
    const auto a = kmeans_fit(syn.data, init, 30, 1e-6, 1);
    const auto b = kmeans_fit(syn.data, init, 30, 1e-6, 3);
    EXPECT_EQ(a.centers, b.centers);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_EQ(a.trace.objective, b.trace.objective);
}

TEST(ExactEm, EstepCountsExactlyNM) {
    auto syn = generate_synthetic(100, 7, 3, 1.0, 110);
    DistanceCounter c;
    const auto init = afkmc2_seed(syn.data, SeedingConfig{7, 5, 3}, c);
    ExactEm<double> em(syn.data, init);
    EXPECT_EQ(em.init_evals(), 700u);
    const auto stats = em.step();
    EXPECT_EQ(stats.estep_evals, 700u);
    EXPECT_EQ(stats.mstep_evals, 700u);
}

TEST(ExactEm, LogLikelihoodMatchesOracleAndIncreases) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto rng = oracle::test_rng(120 + seed);
        const auto y = oracle::random_matrix(rng, 10, 2, 2.0);
        const auto w = seed % 2 ? oracle::random_weights(rng, 10) : std::vector<double>{};
        DataMatrix<double> data(y, w);
        const auto init = oracle::random_matrix(rng, 4, 2, 2.0);
        ExactEm<double> em(data, init);
        // the bound at initialisation is the log-likelihood itself
        EXPECT_NEAR(em.free_energy(), oracle::brute_log_likelihood(y, w, init, em.params().variance), 1e-10);
        double previous = -1e300;
        for (int t = 0; t < 20; ++t) {
            const auto before = em.params();
            const auto stats = em.step();
            const double want = oracle::brute_log_likelihood(y, w, before.means, before.variance);
            ASSERT_TRUE(stats.log_likelihood);
            EXPECT_NEAR(*stats.log_likelihood, want, 1e-10 * std::abs(want));
            EXPECT_GE(*stats.log_likelihood, previous - 1e-9 * std::abs(previous));
            previous = *stats.log_likelihood;
            // after the M-step the bound lies below the new log-likelihood
            const double after =
                oracle::brute_log_likelihood(y, w, em.params().means, em.params().variance);
            EXPECT_LE(stats.objective, after + 1e-9 * std::abs(after));
            EXPECT_GE(stats.objective, want - 1e-9 * std::abs(want));
        }
    }
}

TEST(ExactEm, PosteriorsAreNormalized) {
    auto syn = generate_synthetic(50, 3, 2, 1.0, 130);
    ExactEm<double> em(syn.data, Matrix<double>{{0.0, 0.0}, {1.0, 1.0}, {2.0, 0.5}});
    em.step();
    const auto p = em.posteriors();
    for (std::size_t n = 0; n < 50; ++n) {
        EXPECT_NEAR(p[n * 3] + p[n * 3 + 1] + p[n * 3 + 2], 1.0, 1e-12);
    }
}

// Two well separated 1-D components: the recovered means sit within
// 3 sigma / sqrt(N_k) of the truth.
TEST(ExactEm, RecoversSeparatedMixture) {
    const std::size_t N = 2000;
    const double sigma = 1.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto rng = oracle::test_rng(1000 + seed);
        Matrix<double> y(N, 1);
        std::size_t left = 0;
        for (std::size_t n = 0; n < N; ++n) {
            const bool first = n % 2 == 0;
            left += first;
            y(n, 0) = (first ? -10.0 : 10.0) + sigma * rng.normal();
        }
        DataMatrix<double> data(y);
        const auto fit = exact_em_fit(data, Matrix<double>{{-3.0}, {4.0}}, 200, 1e-10);
        const double tol = 3.0 * sigma / std::sqrt(static_cast<double>(left));
        EXPECT_NEAR(fit.params.means(0, 0), -10.0, tol) << "seed " << seed;
        EXPECT_NEAR(fit.params.means(1, 0), 10.0, tol) << "seed " << seed;
    }
}

TEST(ExactEm, ThreadCountDoesNotChangeResult) {
    auto syn = generate_synthetic(3000, 6, 2, 1.0, 140);
    const Matrix<double> init{{0, 0}, {1, 1}, {2, 2}, {3, 0}, {0, 3}, {2, 1}};
    const auto a = exact_em_fit(syn.data, init, 10, 1e-9, 1);
    const auto b = exact_em_fit(syn.data, init, 10, 1e-9, 4);
    EXPECT_EQ(a.params.means, b.params.means);
    EXPECT_EQ(a.params.variance, b.params.variance);
    EXPECT_EQ(a.trace.objective, b.trace.objective);
}
