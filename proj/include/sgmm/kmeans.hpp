// Lloyd's k-means on the instrumented distance kernel.
#pragma once

#include <algorithm>
#include <chrono>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "distance.hpp"
#include "errors.hpp"
#include "fit_trace.hpp"
#include "matrix.hpp"
#include "parallel.hpp"

namespace sgmm {

template <std::floating_point T>
class KMeans {
public:
    KMeans(const DataMatrix<T>& data, Matrix<T> initial_centers, std::size_t threads = 1)
        : data_(data), threads_(threads), centers_(std::move(initial_centers)),
          assignments_(data.n_points(), std::numeric_limits<std::uint32_t>::max()) {
        if (centers_.rows() == 0 || centers_.cols() != data.dim()) {
            throw usage_error("initial centers do not match the data");
        }
    }

    // Hard assignment (N M distances) followed by the centroid update. The
    // returned objective is the weighted quantization error of the centers
    // used for the assignment.
    IterationStats<T> step() {
        ++iteration_;
        const std::size_t N = data_.n_points();
        const std::size_t M = centers_.rows();
        const std::size_t D = data_.dim();
        struct Acc {
            std::vector<T> sums;
            std::vector<T> mass;
            T error{0};
            std::size_t changed = 0;
            DistanceCounter evals;
        };
        const Acc zero{std::vector<T>(M * D, T{0}), std::vector<T>(M, T{0}), T{0}, 0, {}};
        Acc total = zero;
        chunked_reduce(
            N, threads_, zero,
            [&](Acc& acc, std::size_t begin, std::size_t end) {
                for (std::size_t n = begin; n < end; ++n) {
                    const auto y = data_.row(n);
                    std::uint32_t best = 0;
                    T best_d = std::numeric_limits<T>::infinity();
                    for (std::size_t c = 0; c < M; ++c) {
                        const T d = squared_distance<T>(y, centers_.row(c), acc.evals);
                        if (d < best_d) {
                            best_d = d;
                            best = static_cast<std::uint32_t>(c);
                        }
                    }
                    if (assignments_[n] != best) {
                        ++acc.changed;
                        assignments_[n] = best;
                    }
                    const T w = data_.weight(n);
                    acc.error += w * best_d;
                    T* sum = acc.sums.data() + best * D;
                    for (std::size_t j = 0; j < D; ++j) {
                        sum[j] += w * y[j];
                    }
                    acc.mass[best] += w;
                }
            },
            [&](const Acc& acc) {
                for (std::size_t i = 0; i < total.sums.size(); ++i) {
                    total.sums[i] += acc.sums[i];
                }
                for (std::size_t c = 0; c < M; ++c) {
                    total.mass[c] += acc.mass[c];
                }
                total.error += acc.error;
                total.changed += acc.changed;
                total.evals.merge(acc.evals);
            });
        for (std::size_t c = 0; c < M; ++c) {
            if (total.mass[c] > T{0}) {
                auto center = centers_.row(c);
                for (std::size_t j = 0; j < D; ++j) {
                    center[j] = total.sums[c * D + j] / total.mass[c];
                }
            }
        }
        last_changed_ = total.changed;
        fit_counter_.merge(total.evals);

        IterationStats<T> stats;
        stats.iteration = iteration_;
        stats.objective = total.error;
        stats.estep_evals = total.evals.count();
        return stats;
    }

    // Stops when Q hits zero, no assignment changed, or the relative decrease
    // of Q between consecutive iterations falls below eps.
    FitTrace fit(double eps, std::size_t max_iters) {
        check_stopping(eps, max_iters);
        const auto start = std::chrono::steady_clock::now();
        FitTrace trace;
        for (std::size_t t = 0; t < max_iters; ++t) {
            const auto stats = step();
            const double q = static_cast<double>(stats.objective);
            trace.fit_evals += stats.estep_evals;
            ++trace.iterations;
            bool done = q == 0.0 || (t > 0 && last_changed_ == 0);
            if (!done && !trace.objective.empty()) {
                const double previous = trace.objective.back();
                done = (previous - q) < eps * previous;
            }
            trace.objective.push_back(q);
            if (done) {
                trace.converged = true;
                break;
            }
        }
        trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return trace;
    }

    const Matrix<T>& centers() const noexcept { return centers_; }
    const std::vector<std::uint32_t>& assignments() const noexcept { return assignments_; }
    std::size_t iteration() const noexcept { return iteration_; }
    std::uint64_t fit_evals() const noexcept { return fit_counter_.count(); }

private:
    const DataMatrix<T>& data_;
    std::size_t threads_;
    Matrix<T> centers_;
    std::vector<std::uint32_t> assignments_;
    std::size_t last_changed_ = 0;
    std::size_t iteration_ = 0;
    DistanceCounter fit_counter_;
};

template <std::floating_point T>
struct KMeansResult {
    Matrix<T> centers;
    std::vector<std::uint32_t> assignments;
    FitTrace trace;
};

template <std::floating_point T>
KMeansResult<T> kmeans_fit(const DataMatrix<T>& data, const Matrix<T>& initial_centers, std::size_t max_iters,
                           double eps, std::size_t threads = 1) {
    KMeans<T> model(data, initial_centers, threads);
    FitTrace trace = model.fit(eps, max_iters);
    return {model.centers(), model.assignments(), std::move(trace)};
}

} // namespace sgmm
