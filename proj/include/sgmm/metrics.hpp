// Clustering quality metrics: quantization error, relative error and the
// matched root-mean-square distance between two sets of centers.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "distance.hpp"
#include "errors.hpp"
#include "matrix.hpp"
#include "parallel.hpp"

namespace sgmm {

// Q = sum_n w_n min_c ||y_n - mu_c||^2. Counted only when a counter is given.
template <std::floating_point T>
T quantization_error(const DataMatrix<T>& data, const Matrix<T>& centers, DistanceCounter* counter = nullptr,
                     std::size_t threads = 1) {
    if (centers.rows() == 0 || centers.cols() != data.dim()) {
        throw usage_error("quantization_error: centers do not match the data");
    }
    T total{0};
    chunked_reduce(
        data.n_points(), threads, T{0},
        [&](T& acc, std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) {
                T best = std::numeric_limits<T>::infinity();
                for (std::size_t c = 0; c < centers.rows(); ++c) {
                    best = std::min(best, squared_distance<T>(data.row(n), centers.row(c)));
                }
                acc += data.weight(n) * best;
            }
        },
        [&](const T& acc) { total += acc; });
    if (counter != nullptr) {
        counter->add(data.n_points() * centers.rows());
    }
    return total;
}

// eta = (Q_alg - Q_ref) / Q_ref; undefined when Q_ref is zero.
inline std::optional<double> relative_error(double q_algorithm, double q_reference) {
    if (!(q_reference > 0.0)) {
        return std::nullopt;
    }
    return (q_algorithm - q_reference) / q_reference;
}

// Minimum-cost perfect matching on a square cost matrix (row-major n x n),
// O(n^3) Hungarian method with potentials. Returns the column of each row.
inline std::vector<std::size_t> hungarian_assignment(const std::vector<double>& cost, std::size_t n) {
    if (cost.size() != n * n) {
        throw usage_error("hungarian_assignment: cost matrix is not n x n");
    }
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials; column 0 is a virtual start
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_to(n + 1);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::fill(min_to.begin(), min_to.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double reduced = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (reduced < min_to[j]) {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if (min_to[j] < delta) {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assignment(n);
    for (std::size_t j = 1; j <= n; ++j) {
        assignment[match[j] - 1] = j - 1;
    }
    return assignment;
}

// Repeatedly pairs rows and columns that are each other's nearest among the
// unmatched ones. Not optimal, but O(n^2) per round.
inline std::vector<std::size_t> greedy_mutual_assignment(const std::vector<double>& cost, std::size_t n) {
    if (cost.size() != n * n) {
        throw usage_error("greedy_mutual_assignment: cost matrix is not n x n");
    }
    std::vector<std::size_t> assignment(n, n);
    std::vector<char> row_done(n, 0), col_done(n, 0);
    std::vector<std::size_t> row_best(n), col_best(n);
    std::size_t remaining = n;
    while (remaining > 0) {
        for (std::size_t i = 0; i < n; ++i) {
            if (row_done[i]) {
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                if (!col_done[j] && cost[i * n + j] < best) {
                    best = cost[i * n + j];
                    row_best[i] = j;
                }
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (col_done[j]) {
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                if (!row_done[i] && cost[i * n + j] < best) {
                    best = cost[i * n + j];
                    col_best[j] = i;
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!row_done[i] && col_best[row_best[i]] == i && !col_done[row_best[i]]) {
                assignment[i] = row_best[i];
                row_done[i] = 1;
                col_done[row_best[i]] = 1;
                --remaining;
            }
        }
    }
    return assignment;
}

inline constexpr std::size_t kExactMatchingLimit = 512;

// Root mean squared distance between matched centers. The matching is the
// optimal assignment for M <= 512, greedy mutual-nearest above.
template <std::floating_point T>
T center_rmse(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() == 0) {
        throw usage_error("center_rmse: center sets must have the same nonzero shape");
    }
    const std::size_t M = a.rows();
    std::vector<double> cost(M * M);
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < M; ++j) {
            cost[i * M + j] = static_cast<double>(squared_distance<T>(a.row(i), b.row(j)));
        }
    }
    const auto match = M <= kExactMatchingLimit ? hungarian_assignment(cost, M) : greedy_mutual_assignment(cost, M);
    double total = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        total += cost[i * M + match[i]];
    }
    return static_cast<T>(std::sqrt(total / static_cast<double>(M)));
}

} // namespace sgmm
