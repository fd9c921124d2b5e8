// Lightweight coresets (Bachem, Lucic & Krause, KDD 2018).
#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "distance.hpp"
#include "errors.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace sgmm {

// Importance distribution q(n) = 1 / 2N + d(y_n, mean)^2 / (2 sum_k d(y_k, mean)^2).
// Falls back to the uniform distribution when every point equals the mean.
template <std::floating_point T>
std::vector<double> lightweight_importance(const DataMatrix<T>& data, DistanceCounter& counter) {
    if (data.weighted()) {
        throw usage_error("lightweight coresets are built from unweighted data");
    }
    const std::size_t N = data.n_points();
    const std::size_t D = data.dim();
    std::vector<T> mean(D, T{0});
    for (std::size_t n = 0; n < N; ++n) {
        const auto y = data.row(n);
        for (std::size_t d = 0; d < D; ++d) {
            mean[d] += y[d];
        }
    }
    for (auto& m : mean) {
        m /= static_cast<T>(N);
    }
    std::vector<double> q(N);
    double total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        q[n] = static_cast<double>(squared_distance<T>(data.row(n), mean, counter));
        total += q[n];
    }
    const double uniform = 1.0 / static_cast<double>(N);
    for (auto& v : q) {
        v = total > 0.0 ? 0.5 * uniform + 0.5 * v / total : uniform;
    }
    return q;
}

// N' rows drawn i.i.d. (with replacement) from q, weighted 1 / (N' q(n)).
template <std::floating_point T>
DataMatrix<T> lightweight_coreset(const DataMatrix<T>& data, std::size_t size, std::uint64_t seed,
                                  DistanceCounter& counter) {
    if (size == 0 || size > data.n_points()) {
        throw usage_error("coreset size must satisfy 1 <= N' <= N");
    }
    const auto q = lightweight_importance(data, counter);
    const DiscreteSampler draw(q);
    RngStream rng(seed, StreamDomain::coreset);
    const std::size_t D = data.dim();
    Matrix<T> rows(size, D);
    std::vector<T> weights(size);
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t n = draw(rng);
        const auto y = data.row(n);
        std::copy(y.begin(), y.end(), rows.row(i).begin());
        weights[i] = static_cast<T>(1.0 / (static_cast<double>(size) * q[n]));
    }
    return DataMatrix<T>(std::move(rows), std::move(weights));
}

} // namespace sgmm
