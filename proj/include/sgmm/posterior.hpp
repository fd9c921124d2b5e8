// Posteriors over clusters for the isotropic, uniform-prior GMM.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "errors.hpp"

namespace sgmm {

// Writes softmax(-d / 2 sigma^2) into `out`, shifted by the smallest
// distance. Returns log sum_c exp(-d_c / 2 sigma^2).
template <std::floating_point T>
T normalized_posterior(std::span<const T> distances, T variance, std::span<T> out) {
    if (distances.empty() || out.size() != distances.size()) {
        throw usage_error("normalized_posterior: size mismatch");
    }
    if (!(variance > T{0})) {
        throw usage_error("normalized_posterior: variance must be positive");
    }
    const T d_min = *std::min_element(distances.begin(), distances.end());
    const T scale = T{1} / (T{2} * variance);
    T z{0};
    for (std::size_t c = 0; c < distances.size(); ++c) {
        out[c] = std::exp(-(distances[c] - d_min) * scale);
        z += out[c];
    }
    for (auto& p : out) {
        p /= z;
    }
    return std::log(z) - d_min * scale;
}

template <std::floating_point T>
std::vector<T> exact_posterior(std::span<const T> distances, T variance) {
    std::vector<T> p(distances.size());
    normalized_posterior<T>(distances, variance, p);
    return p;
}

// log p(C = c, Y = y | theta) for the uniform-prior isotropic model.
template <std::floating_point T>
T log_joint(T distance, T variance, std::size_t n_clusters, std::size_t dim) {
    return -std::log(static_cast<T>(n_clusters)) -
           T{0.5} * static_cast<T>(dim) * std::log(T{2} * std::numbers::pi_v<T> * variance) -
           distance / (T{2} * variance);
}

// Shannon entropy with 0 log 0 = 0.
template <std::floating_point T>
T entropy(std::span<const T> q) noexcept {
    T h{0};
    for (T v : q) {
        if (v > T{0}) {
            h -= v * std::log(v);
        }
    }
    return h;
}

// KL[q || p] for q supported on `clusters` (aligned with q) and the exact
// posterior p over all M clusters. +inf when q puts mass where p is zero.
template <std::floating_point T>
T kl_to_exact(std::span<const T> q, std::span<const std::uint32_t> clusters, std::span<const T> exact) {
    if (q.size() != clusters.size()) {
        throw usage_error("kl_to_exact: q and cluster list differ in length");
    }
    T kl{0};
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (clusters[k] >= exact.size()) {
            throw usage_error("kl_to_exact: cluster index out of range");
        }
        if (q[k] <= T{0}) {
            continue;
        }
        const T p = exact[clusters[k]];
        if (p <= T{0}) {
            return std::numeric_limits<T>::infinity();
        }
        kl += q[k] * std::log(q[k] / p);
    }
    return kl;
}

} // namespace sgmm
