// AFK-MC^2 seeding (Bachem et al., NIPS 2016): Markov-chain approximation
// of k-means++ with the assumption-free proposal
//   g(y) = 1/2 w_y d(y, mu_1)^2 / sum w d^2 + 1/2 w_y / sum w.
#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "distance.hpp"
#include "errors.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace sgmm {

struct SeedingConfig {
    std::size_t n_clusters = 1;   // M
    std::size_t chain_length = 5; // m
    std::uint64_t seed = 0;
};

template <std::floating_point T>
Matrix<T> afkmc2_seed(const DataMatrix<T>& data, const SeedingConfig& cfg, DistanceCounter& counter) {
    const std::size_t N = data.n_points();
    const std::size_t D = data.dim();
    const std::size_t M = cfg.n_clusters;
    if (M == 0 || M > N) {
        throw usage_error("afkmc2: need 1 <= M <= N");
    }
    if (cfg.chain_length == 0) {
        throw usage_error("afkmc2: chain length must be at least 1");
    }
    RngStream rng(cfg.seed, StreamDomain::seeding);
    Matrix<T> centers(M, D);
    auto take = [&](std::size_t c, std::size_t n) {
        const auto y = data.row(n);
        std::copy(y.begin(), y.end(), centers.row(c).begin());
    };

    std::vector<double> weights(N);
    for (std::size_t n = 0; n < N; ++n) {
        weights[n] = static_cast<double>(data.weight(n));
    }
    const std::size_t first = DiscreteSampler(weights)(rng);
    take(0, first);
    if (M == 1) {
        return centers;
    }

    std::vector<double> proposal(N);
    double d2_total = 0.0;
    double w_total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        proposal[n] = weights[n] * static_cast<double>(squared_distance<T>(data.row(n), centers.row(0), counter));
        d2_total += proposal[n];
        w_total += weights[n];
    }
    for (std::size_t n = 0; n < N; ++n) {
        const double uniform_term = weights[n] / w_total;
        proposal[n] = d2_total > 0.0 ? 0.5 * (proposal[n] / d2_total + uniform_term) : uniform_term;
    }
    const DiscreteSampler draw(proposal);

    // weighted squared distance to the closest chosen center
    auto key = [&](std::size_t n, std::size_t chosen) {
        T best = std::numeric_limits<T>::infinity();
        for (std::size_t c = 0; c < chosen; ++c) {
            best = std::min(best, squared_distance<T>(data.row(n), centers.row(c), counter));
        }
        return weights[n] * static_cast<double>(best);
    };

    for (std::size_t c = 1; c < M; ++c) {
        std::size_t x = draw(rng);
        double x_key = key(x, c);
        for (std::size_t step = 1; step < cfg.chain_length; ++step) {
            const std::size_t y = draw(rng);
            const double y_key = key(y, c);
            const double x_ratio = x_key / proposal[x];
            const double y_ratio = y_key / proposal[y];
            if (x_ratio <= 0.0 || y_ratio / x_ratio > rng.uniform()) {
                x = y;
                x_key = y_key;
            }
        }
        take(c, x);
    }
    return centers;
}

} // namespace sgmm
