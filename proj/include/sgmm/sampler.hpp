// Similarity-guided maintenance of the truncated sets K(n).
//
// Each EM iteration proposes up to R new clusters per datapoint from the
// similarity row of its current best cluster (members of K(n) masked out),
// evaluates distances to K(n) plus the proposals and keeps the H closest.
#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "distance.hpp"
#include "errors.hpp"
#include "matrix.hpp"
#include "rng.hpp"
#include "truncation_state.hpp"

namespace sgmm {

template <std::floating_point T>
struct CandidateDistribution {
    std::vector<ClusterIndex> support; // clusters outside K(n), increasing
    std::vector<T> probs;              // aligned with support, sums to 1
};

// Row `best` of S restricted to the complement of K and renormalised.
// A row with no mass outside K gives the uniform distribution. Returns
// nullopt when K already holds every cluster.
template <std::floating_point T>
std::optional<CandidateDistribution<T>> conditional_distribution(const SimilarityMatrix<T>& similarity,
                                                                 ClusterIndex best,
                                                                 std::span<const ClusterIndex> members) {
    const std::size_t M = similarity.n_clusters();
    if (best >= M) {
        throw usage_error("conditional_distribution: best cluster out of range");
    }
    if (std::find(members.begin(), members.end(), best) == members.end()) {
        throw usage_error("conditional_distribution: best cluster must belong to K");
    }
    std::vector<char> in_set(M, 0);
    for (ClusterIndex c : members) {
        if (c >= M) {
            throw usage_error("conditional_distribution: member index out of range");
        }
        in_set[c] = 1;
    }
    CandidateDistribution<T> dist;
    dist.support.reserve(M - std::min(M, members.size()));
    for (std::size_t c = 0; c < M; ++c) {
        if (!in_set[c]) {
            dist.support.push_back(static_cast<ClusterIndex>(c));
        }
    }
    if (dist.support.empty()) {
        return std::nullopt;
    }
    const auto row = similarity.row(best);
    dist.probs.resize(dist.support.size());
    T total{0};
    for (std::size_t k = 0; k < dist.support.size(); ++k) {
        dist.probs[k] = row[dist.support[k]];
        total += dist.probs[k];
    }
    if (total > T{0}) {
        for (auto& p : dist.probs) {
            p /= total;
        }
    } else {
        std::fill(dist.probs.begin(), dist.probs.end(), T{1} / static_cast<T>(dist.support.size()));
    }
    return dist;
}

// Draws without replacement: after each draw the chosen entry is masked and
// the remainder renormalised. Stops at R picks or when no mass is left.
template <std::floating_point T>
std::vector<ClusterIndex> sample_candidates(const CandidateDistribution<T>& dist, std::size_t count, RngStream& rng) {
    if (count == 0) {
        throw usage_error("sample_candidates: R must be at least 1");
    }
    if (dist.support.size() != dist.probs.size()) {
        throw usage_error("sample_candidates: malformed distribution");
    }
    std::vector<ClusterIndex> picked;
    picked.reserve(std::min(count, dist.support.size()));
    std::vector<char> taken(dist.support.size(), 0);
    while (picked.size() < count) {
        T remaining{0};
        for (std::size_t k = 0; k < dist.probs.size(); ++k) {
            if (!taken[k]) {
                remaining += dist.probs[k];
            }
        }
        if (!(remaining > T{0})) {
            break;
        }
        const T target = static_cast<T>(rng.uniform()) * remaining;
        T cumulative{0};
        std::size_t choice = dist.probs.size();
        std::size_t last_positive = dist.probs.size();
        for (std::size_t k = 0; k < dist.probs.size(); ++k) {
            if (taken[k] || !(dist.probs[k] > T{0})) {
                continue;
            }
            last_positive = k;
            cumulative += dist.probs[k];
            if (cumulative > target) {
                choice = k;
                break;
            }
        }
        if (choice == dist.probs.size()) {
            choice = last_positive;
        }
        taken[choice] = 1;
        picked.push_back(dist.support[choice]);
    }
    return picked;
}

// Evaluates y against every candidate (counted), merges with the cached
// distances of K(n), which must be current for `means`, keeps the H smallest
// (ties to the lower index) in increasing order and records the closest cluster.
template <std::floating_point T>
void update_truncation(TruncationState<T>& state,
                       std::size_t n,
                       std::span<const ClusterIndex> candidates,
                       std::span<const T> y,
                       const Matrix<T>& means,
                       DistanceCounter& counter) {
    const std::size_t H = state.truncation();
    auto members = state.clusters(n);
    std::vector<std::pair<T, ClusterIndex>> pool;
    pool.reserve(H + candidates.size());
    auto distances = state.distances(n);
    for (std::size_t k = 0; k < H; ++k) {
        pool.emplace_back(distances[k], members[k]);
    }
    for (ClusterIndex c : candidates) {
        if (c >= state.n_clusters()) {
            throw usage_error("update_truncation: candidate index out of range");
        }
        if (std::find(members.begin(), members.end(), c) != members.end()) {
            throw usage_error("update_truncation: candidate already in K");
        }
        pool.emplace_back(squared_distance<T>(y, means.row(c), counter), c);
    }
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(H), pool.end());
    for (std::size_t k = 0; k < H; ++k) {
        distances[k] = pool[k].first;
        members[k] = pool[k].second;
    }
    state.set_best(n, pool.front().second);
}

// H distinct clusters per datapoint, uniformly at random (Floyd's subset
// sampling), stored in increasing index order. Distances are left unset.
template <std::floating_point T>
TruncationState<T> init_truncation(std::size_t n_points,
                                   std::size_t n_clusters,
                                   std::size_t truncation,
                                   std::size_t candidates,
                                   std::uint64_t seed) {
    TruncationState<T> state(n_points, n_clusters, truncation, candidates);
    std::vector<ClusterIndex> subset;
    subset.reserve(truncation);
    for (std::size_t n = 0; n < n_points; ++n) {
        subset.clear();
        if (truncation == n_clusters) {
            for (std::size_t c = 0; c < n_clusters; ++c) {
                subset.push_back(static_cast<ClusterIndex>(c));
            }
        } else {
            RngStream rng(seed, StreamDomain::truncation_init, n);
            for (std::size_t j = n_clusters - truncation; j < n_clusters; ++j) {
                const auto t = static_cast<ClusterIndex>(rng.uniform_index(j + 1));
                if (std::find(subset.begin(), subset.end(), t) == subset.end()) {
                    subset.push_back(t);
                } else {
                    subset.push_back(static_cast<ClusterIndex>(j));
                }
            }
            std::sort(subset.begin(), subset.end());
        }
        std::copy(subset.begin(), subset.end(), state.clusters(n).begin());
        state.set_best(n, subset.front());
    }
    return state;
}

} // namespace sgmm
