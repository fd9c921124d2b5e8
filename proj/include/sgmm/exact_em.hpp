// Exact EM for the isotropic, uniform-prior GMM. Dense N x M posteriors;
// intended as the reference the truncated algorithm is measured against.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "distance.hpp"
#include "errors.hpp"
#include "fit_trace.hpp"
#include "matrix.hpp"
#include "parallel.hpp"
#include "posterior.hpp"

namespace sgmm {

template <std::floating_point T>
class ExactEm {
public:
    // Without an explicit variance, sigma^2_0 = (1 / D) * weighted mean of the
    // distance to the closest initial mean (floored).
    ExactEm(const DataMatrix<T>& data, Matrix<T> initial_means, std::size_t threads = 1,
            std::optional<T> variance = std::nullopt)
        : data_(data), threads_(threads), params_{std::move(initial_means), T{1}} {
        if (params_.n_clusters() == 0 || params_.dim() != data.dim()) {
            throw usage_error("initial means do not match the data");
        }
        const std::size_t N = data.n_points();
        const std::size_t M = params_.n_clusters();
        std::vector<T> distances(N * M);
        std::vector<DistanceCounter> tallies(chunk_count(N));
        for_each_chunk(N, threads_, [&](std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) {
                for (std::size_t c = 0; c < M; ++c) {
                    distances[n * M + c] =
                        squared_distance<T>(data_.row(n), params_.means.row(c), tallies[begin / kChunkSize]);
                }
            }
        });
        for (const auto& t : tallies) {
            init_counter_.merge(t);
        }
        if (variance) {
            params_.variance = std::max(*variance, data.variance_floor());
        } else {
            T sum{0};
            for (std::size_t n = 0; n < N; ++n) {
                const auto first = distances.begin() + static_cast<std::ptrdiff_t>(n * M);
                sum += data.weight(n) * *std::min_element(first, first + static_cast<std::ptrdiff_t>(M));
            }
            params_.variance =
                std::max(sum / (static_cast<T>(data.dim()) * data.total_weight()), data.variance_floor());
        }
        params_.validate();
        free_energy_ = log_likelihood_from(distances);
    }

    IterationStats<T> step() {
        ++iteration_;
        const std::size_t N = data_.n_points();
        const std::size_t M = params_.n_clusters();
        const std::size_t D = data_.dim();
        posteriors_.resize(N * M);

        // E-step: exact posteriors, log-likelihood of the current parameters,
        // entropy and the mean sufficient statistics in one pass.
        struct Acc {
            std::vector<T> numer;
            std::vector<T> denom;
            T log_likelihood{0};
            T entropy{0};
            DistanceCounter evals;
        };
        const Acc zero{std::vector<T>(M * D, T{0}), std::vector<T>(M, T{0}), T{0}, T{0}, {}};
        Acc total = zero;
        const T log_norm = -std::log(static_cast<T>(M)) -
                           T{0.5} * static_cast<T>(D) * std::log(T{2} * std::numbers::pi_v<T> * params_.variance);
        chunked_reduce(
            N, threads_, zero,
            [&](Acc& acc, std::size_t begin, std::size_t end) {
                std::vector<T> d(M);
                for (std::size_t n = begin; n < end; ++n) {
                    const auto y = data_.row(n);
                    for (std::size_t c = 0; c < M; ++c) {
                        d[c] = squared_distance<T>(y, params_.means.row(c), acc.evals);
                    }
                    std::span<T> p(posteriors_.data() + n * M, M);
                    const T log_z = normalized_posterior<T>(d, params_.variance, p);
                    const T w = data_.weight(n);
                    acc.log_likelihood += w * (log_norm + log_z);
                    acc.entropy += w * entropy<T>(p);
                    for (std::size_t c = 0; c < M; ++c) {
                        const T wp = w * p[c];
                        if (wp == T{0}) {
                            continue;
                        }
                        T* numer = acc.numer.data() + c * D;
                        for (std::size_t j = 0; j < D; ++j) {
                            numer[j] += wp * y[j];
                        }
                        acc.denom[c] += wp;
                    }
                }
            },
            [&](const Acc& acc) {
                for (std::size_t i = 0; i < total.numer.size(); ++i) {
                    total.numer[i] += acc.numer[i];
                }
                for (std::size_t c = 0; c < M; ++c) {
                    total.denom[c] += acc.denom[c];
                }
                total.log_likelihood += acc.log_likelihood;
                total.entropy += acc.entropy;
                total.evals.merge(acc.evals);
            });

        for (std::size_t c = 0; c < M; ++c) {
            if (total.denom[c] > T{0}) {
                auto mu = params_.means.row(c);
                for (std::size_t j = 0; j < D; ++j) {
                    mu[j] = total.numer[c * D + j] / total.denom[c];
                }
            }
        }

        // M-step variance against the new means.
        struct Scatter {
            T value{0};
            DistanceCounter evals;
        };
        Scatter scatter;
        chunked_reduce(
            N, threads_, Scatter{},
            [&](Scatter& acc, std::size_t begin, std::size_t end) {
                for (std::size_t n = begin; n < end; ++n) {
                    const auto y = data_.row(n);
                    const T* p = posteriors_.data() + n * M;
                    T point{0};
                    for (std::size_t c = 0; c < M; ++c) {
                        point += p[c] * squared_distance<T>(y, params_.means.row(c), acc.evals);
                    }
                    acc.value += data_.weight(n) * point;
                }
            },
            [&](const Scatter& acc) {
                scatter.value += acc.value;
                scatter.evals.merge(acc.evals);
            });
        params_.variance = std::max(scatter.value / (static_cast<T>(D) * data_.total_weight()), data_.variance_floor());

        const T new_log_norm = -std::log(static_cast<T>(M)) -
                               T{0.5} * static_cast<T>(D) *
                                   std::log(T{2} * std::numbers::pi_v<T> * params_.variance);
        free_energy_ = data_.total_weight() * new_log_norm - scatter.value / (T{2} * params_.variance) + total.entropy;

        fit_counter_.merge(total.evals);
        fit_counter_.merge(scatter.evals);

        IterationStats<T> stats;
        stats.iteration = iteration_;
        stats.objective = free_energy_;
        stats.variance = params_.variance;
        stats.estep_evals = total.evals.count();
        stats.mstep_evals = scatter.evals.count();
        stats.log_likelihood = total.log_likelihood;
        return stats;
    }

    FitTrace fit(double eps, std::size_t max_iters) { return fit_free_energy(*this, eps, max_iters); }

    const ModelParams<T>& params() const noexcept { return params_; }
    // Posteriors of the last E-step, row-major N x M.
    std::span<const T> posteriors() const noexcept { return posteriors_; }
    T free_energy() const noexcept { return free_energy_; }
    std::size_t iteration() const noexcept { return iteration_; }
    std::uint64_t init_evals() const noexcept { return init_counter_.count(); }
    std::uint64_t fit_evals() const noexcept { return fit_counter_.count(); }

private:
    T log_likelihood_from(const std::vector<T>& distances) const {
        const std::size_t N = data_.n_points();
        const std::size_t M = params_.n_clusters();
        const T log_norm = -std::log(static_cast<T>(M)) -
                           T{0.5} * static_cast<T>(data_.dim()) *
                               std::log(T{2} * std::numbers::pi_v<T> * params_.variance);
        std::vector<T> p(M);
        T total{0};
        for (std::size_t n = 0; n < N; ++n) {
            const std::span<const T> d(distances.data() + n * M, M);
            total += data_.weight(n) * (log_norm + normalized_posterior<T>(d, params_.variance, p));
        }
        return total;
    }

    const DataMatrix<T>& data_;
    std::size_t threads_;
    ModelParams<T> params_;
    std::vector<T> posteriors_;
    T free_energy_{0};
    std::size_t iteration_ = 0;
    DistanceCounter init_counter_;
    DistanceCounter fit_counter_;
};

template <std::floating_point T>
struct ExactEmResult {
    ModelParams<T> params;
    FitTrace trace;
};

template <std::floating_point T>
ExactEmResult<T> exact_em_fit(const DataMatrix<T>& data, const Matrix<T>& initial_means, std::size_t max_iters,
                              double eps, std::size_t threads = 1, std::optional<T> variance = std::nullopt) {
    ExactEm<T> model(data, initial_means, threads, variance);
    FitTrace trace = model.fit(eps, max_iters);
    return {model.params(), std::move(trace)};
}

} // namespace sgmm
