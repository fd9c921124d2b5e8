#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>

#include <sgmm/parallel.hpp>

using namespace sgmm;

TEST(ParallelIndices, VisitsEveryIndexOnce) {
    for (std::size_t threads : {1u, 2u, 5u}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_indices(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
        for (const auto& h : hits) {
            EXPECT_EQ(h.load(), 1);
        }
    }
}

TEST(ParallelIndices, PropagatesExceptions) {
    EXPECT_THROW(parallel_indices(100, 4,
                                  [](std::size_t i) {
                                      if (i == 37) {
                                          throw std::runtime_error("boom");
                                      }
                                  }),
                 std::runtime_error);
}

TEST(ChunkedReduce, ResultIndependentOfThreads) {
    // a sum whose value depends on the association order
    const std::size_t n = 10 * kChunkSize + 17;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = 1.0 / static_cast<double>(i + 1) * ((i % 3) ? 1e8 : 1e-8);
    }
    auto run = [&](std::size_t threads) {
        double total = 0.0;
        chunked_reduce(
            n, threads, 0.0,
            [&](double& acc, std::size_t b, std::size_t e) {
                for (std::size_t i = b; i < e; ++i) {
                    acc += v[i];
                }
            },
            [&](const double& acc) { total += acc; });
        return total;
    };
    const double one = run(1);
    for (std::size_t threads : {2u, 3u, 8u, 64u}) {
        EXPECT_EQ(run(threads), one);
    }
}

TEST(ChunkedReduce, MergesInChunkOrder) {
    const std::size_t n = 7 * kChunkSize;
    std::vector<std::size_t> seen;
    chunked_reduce(
        n, 3, std::size_t{0}, [](std::size_t& acc, std::size_t b, std::size_t) { acc = b; },
        [&](const std::size_t& acc) { seen.push_back(acc / kChunkSize); });
    EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
}

TEST(ForEachChunk, CoversRange) {
    std::vector<int> hits(3 * kChunkSize + 5, 0);
    for_each_chunk(hits.size(), 2, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            ++hits[i];
        }
    });
    for (int h : hits) {
        EXPECT_EQ(h, 1);
    }
}
