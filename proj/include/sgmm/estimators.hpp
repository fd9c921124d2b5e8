// E- and M-step kernels on truncated posteriors, with optional coreset
// weights. With unit weights every normalisation by sum(w) reduces to N.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "distance.hpp"
#include "errors.hpp"
#include "matrix.hpp"
#include "parallel.hpp"
#include "posterior.hpp"
#include "truncation_state.hpp"

namespace sgmm {

namespace detail {

template <std::floating_point T>
void check_shapes(const DataMatrix<T>& data, const Responsibilities<T>& resp, const TruncationState<T>& state) {
    if (state.n_points() != data.n_points() || resp.n_points() != data.n_points()) {
        throw usage_error("data, responsibilities and truncation state disagree on N");
    }
    if (resp.truncation() != state.truncation()) {
        throw usage_error("responsibilities and truncation state disagree on H");
    }
}

// Lower bound of the log-likelihood given per-(n, k) distances from `dist`.
template <std::floating_point T, class DistanceFn>
T free_energy_impl(const DataMatrix<T>& data,
                   const Responsibilities<T>& resp,
                   const TruncationState<T>& state,
                   T variance,
                   std::size_t threads,
                   DistanceFn&& dist) {
    const std::size_t H = state.truncation();
    const T log_norm = -std::log(static_cast<T>(state.n_clusters())) -
                       T{0.5} * static_cast<T>(data.dim()) * std::log(T{2} * std::numbers::pi_v<T> * variance);
    const T inv_two_var = T{1} / (T{2} * variance);
    T total{0};
    chunked_reduce(
        data.n_points(), threads, T{0},
        [&](T& acc, std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) {
                const auto q = resp[n];
                T point{0};
                for (std::size_t k = 0; k < H; ++k) {
                    point += q[k] * (log_norm - dist(n, k) * inv_two_var);
                }
                point += entropy<T>(q);
                acc += data.weight(n) * point;
            }
        },
        [&](const T& acc) { total += acc; });
    return total;
}

} // namespace detail

// Truncated posteriors q(n) over K(n) from the cached distances.
template <std::floating_point T>
Responsibilities<T> compute_responsibilities(const TruncationState<T>& state, T variance, std::size_t threads = 1) {
    Responsibilities<T> resp(state.n_points(), state.truncation());
    for_each_chunk(state.n_points(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n) {
            normalized_posterior<T>(state.distances(n), variance, resp[n]);
        }
    });
    return resp;
}

template <std::floating_point T>
std::vector<T> truncated_posterior(const TruncationState<T>& state, std::size_t n, T variance) {
    std::vector<T> q(state.truncation());
    normalized_posterior<T>(state.distances(n), variance, q);
    return q;
}

// Recomputes the cached distances of every K(n) against `means` (counted)
// and the closest member. Membership and order are untouched.
template <std::floating_point T>
void refresh_distances(const DataMatrix<T>& data,
                       TruncationState<T>& state,
                       const Matrix<T>& means,
                       DistanceCounter& counter,
                       std::size_t threads = 1) {
    std::vector<DistanceCounter> tallies(chunk_count(data.n_points()));
    for_each_chunk(data.n_points(), threads, [&](std::size_t begin, std::size_t end) {
        DistanceCounter& local = tallies[begin / kChunkSize];
        for (std::size_t n = begin; n < end; ++n) {
            const auto members = state.clusters(n);
            auto d = state.distances(n);
            std::size_t best = 0;
            for (std::size_t k = 0; k < members.size(); ++k) {
                d[k] = squared_distance<T>(data.row(n), means.row(members[k]), local);
                if (d[k] < d[best] || (d[k] == d[best] && members[k] < members[best])) {
                    best = k;
                }
            }
            state.set_best(n, members[best]);
        }
    });
    for (const auto& t : tallies) {
        counter.merge(t);
    }
}

// Free energy using the distances cached in `state`.
template <std::floating_point T>
T free_energy_cached(const DataMatrix<T>& data,
                     const Responsibilities<T>& resp,
                     const TruncationState<T>& state,
                     T variance,
                     std::size_t threads = 1) {
    detail::check_shapes(data, resp, state);
    return detail::free_energy_impl(data, resp, state, variance, threads,
                                    [&](std::size_t n, std::size_t k) { return state.distances(n)[k]; });
}

// sum_n w_n sum_{c in K(n)} q_c (log p(c, y_n | theta) - log q_c), distances
// recomputed from params.means. Counted only when a counter is supplied.
template <std::floating_point T>
T free_energy(const DataMatrix<T>& data,
              const ModelParams<T>& params,
              const Responsibilities<T>& resp,
              const TruncationState<T>& state,
              DistanceCounter* counter = nullptr,
              std::size_t threads = 1) {
    detail::check_shapes(data, resp, state);
    if (params.n_clusters() != state.n_clusters() || params.dim() != data.dim()) {
        throw usage_error("free_energy: parameter shape mismatch");
    }
    const T value = detail::free_energy_impl(data, resp, state, params.variance, threads, [&](std::size_t n, std::size_t k) {
        return squared_distance<T>(data.row(n), params.means.row(state.clusters(n)[k]));
    });
    if (counter != nullptr) {
        counter->add(data.n_points() * state.truncation());
    }
    return value;
}

// mu_c = sum_n w_n q_c(n) y_n / sum_n w_n q_c(n) over datapoints with
// c in K(n). Clusters without responsibility keep their old mean.
template <std::floating_point T>
Matrix<T> m_step_means(const DataMatrix<T>& data,
                       const Responsibilities<T>& resp,
                       const TruncationState<T>& state,
                       const Matrix<T>& old_means,
                       std::size_t threads = 1) {
    detail::check_shapes(data, resp, state);
    const std::size_t M = state.n_clusters();
    const std::size_t D = data.dim();
    if (old_means.rows() != M || old_means.cols() != D) {
        throw usage_error("m_step_means: old means have the wrong shape");
    }
    struct Acc {
        std::vector<T> numer;
        std::vector<T> denom;
    };
    const Acc zero{std::vector<T>(M * D, T{0}), std::vector<T>(M, T{0})};
    Acc total = zero;
    chunked_reduce(
        data.n_points(), threads, zero,
        [&](Acc& acc, std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) {
                const auto y = data.row(n);
                const auto q = resp[n];
                const auto members = state.clusters(n);
                const T w = data.weight(n);
                for (std::size_t k = 0; k < members.size(); ++k) {
                    const T wq = w * q[k];
                    if (wq == T{0}) {
                        continue;
                    }
                    T* numer = acc.numer.data() + members[k] * D;
                    for (std::size_t d = 0; d < D; ++d) {
                        numer[d] += wq * y[d];
                    }
                    acc.denom[members[k]] += wq;
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
        });
    Matrix<T> means(M, D);
    for (std::size_t c = 0; c < M; ++c) {
        auto out = means.row(c);
        if (total.denom[c] > T{0}) {
            for (std::size_t d = 0; d < D; ++d) {
                out[d] = total.numer[c * D + d] / total.denom[c];
            }
        } else {
            const auto old = old_means.row(c);
            std::copy(old.begin(), old.end(), out.begin());
        }
    }
    return means;
}

namespace detail {

template <std::floating_point T, class DistanceFn>
T weighted_scatter(const DataMatrix<T>& data,
                   const Responsibilities<T>& resp,
                   std::size_t threads,
                   DistanceFn&& dist) {
    T total{0};
    chunked_reduce(
        data.n_points(), threads, T{0},
        [&](T& acc, std::size_t begin, std::size_t end) {
            for (std::size_t n = begin; n < end; ++n) {
                const auto q = resp[n];
                T point{0};
                for (std::size_t k = 0; k < q.size(); ++k) {
                    point += q[k] * dist(n, k);
                }
                acc += data.weight(n) * point;
            }
        },
        [&](const T& acc) { total += acc; });
    return total;
}

template <std::floating_point T>
T scatter_to_variance(const DataMatrix<T>& data, T scatter) {
    const T variance = scatter / (static_cast<T>(data.dim()) * data.total_weight());
    return std::max(variance, data.variance_floor());
}

} // namespace detail

// sigma^2 = sum_n w_n sum_{c in K(n)} q_c ||y_n - mu_c||^2 / (D sum_n w_n),
// floored at data.variance_floor(). Distances to the new means are counted.
template <std::floating_point T>
T m_step_variance(const DataMatrix<T>& data,
                  const Responsibilities<T>& resp,
                  const TruncationState<T>& state,
                  const Matrix<T>& new_means,
                  DistanceCounter& counter,
                  std::size_t threads = 1) {
    detail::check_shapes(data, resp, state);
    if (new_means.rows() != state.n_clusters() || new_means.cols() != data.dim()) {
        throw usage_error("m_step_variance: means have the wrong shape");
    }
    const T scatter = detail::weighted_scatter(data, resp, threads, [&](std::size_t n, std::size_t k) {
        return squared_distance<T>(data.row(n), new_means.row(state.clusters(n)[k]));
    });
    counter.add(data.n_points() * state.truncation());
    return detail::scatter_to_variance(data, scatter);
}

// Same estimate from distances already cached against the new means.
template <std::floating_point T>
T m_step_variance_cached(const DataMatrix<T>& data,
                         const Responsibilities<T>& resp,
                         const TruncationState<T>& state,
                         std::size_t threads = 1) {
    detail::check_shapes(data, resp, state);
    const T scatter = detail::weighted_scatter(
        data, resp, threads, [&](std::size_t n, std::size_t k) { return state.distances(n)[k]; });
    return detail::scatter_to_variance(data, scatter);
}

// S_ij = (1 / sum w) sum_n w_n exp(-(e_i(n) + e_j(n))) over {i, j} in K(n),
// with e_c(n) = (d_c(n) - min_k d_k(n)) / (2 sigma^2) from the cached
// distances. Contributions are merged in datapoint order, so S is exactly
// symmetric.
template <std::floating_point T>
SimilarityMatrix<T> similarity_from_responsibilities(const TruncationState<T>& state,
                                                     T variance,
                                                     const DataMatrix<T>& data,
                                                     std::size_t threads = 1) {
    if (state.n_points() != data.n_points()) {
        throw usage_error("similarity: data and truncation state disagree on N");
    }
    const std::size_t H = state.truncation();
    const std::size_t pairs = H * (H + 1) / 2;
    const T inv_two_var = T{1} / (T{2} * variance);
    SimilarityMatrix<T> similarity(state.n_clusters());
    struct Acc {
        std::size_t begin = 0;
        std::vector<T> contributions; // H(H+1)/2 upper-triangle terms per point
    };
    chunked_reduce(
        data.n_points(), threads, Acc{},
        [&](Acc& acc, std::size_t begin, std::size_t end) {
            acc.begin = begin;
            acc.contributions.resize((end - begin) * pairs);
            std::vector<T> scaled(H);
            T* out = acc.contributions.data();
            for (std::size_t n = begin; n < end; ++n) {
                const auto d = state.distances(n);
                const T d_min = *std::min_element(d.begin(), d.end());
                for (std::size_t k = 0; k < H; ++k) {
                    scaled[k] = (d[k] - d_min) * inv_two_var;
                }
                const T w = data.weight(n);
                for (std::size_t a = 0; a < H; ++a) {
                    for (std::size_t b = a; b < H; ++b) {
                        *out++ = w * std::exp(-(scaled[a] + scaled[b]));
                    }
                }
            }
        },
        [&](const Acc& acc) {
            const T* in = acc.contributions.data();
            const std::size_t count = acc.contributions.size() / pairs;
            for (std::size_t n = acc.begin; n < acc.begin + count; ++n) {
                const auto members = state.clusters(n);
                for (std::size_t a = 0; a < H; ++a) {
                    for (std::size_t b = a; b < H; ++b) {
                        const T v = *in++;
                        similarity(members[a], members[b]) += v;
                        if (a != b) {
                            similarity(members[b], members[a]) += v;
                        }
                    }
                }
            }
        });
    const T inv_total = T{1} / data.total_weight();
    for (std::size_t i = 0; i < state.n_clusters(); ++i) {
        for (std::size_t j = 0; j < state.n_clusters(); ++j) {
            similarity(i, j) *= inv_total;
        }
    }
    return similarity;
}

} // namespace sgmm
