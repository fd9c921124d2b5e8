// Per-datapoint truncated cluster sets and the quantities derived from them.
#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "errors.hpp"

namespace sgmm {

using ClusterIndex = std::uint32_t;

// For every datapoint n: H distinct cluster indices K(n), the squared
// distances to those clusters under the current means, and the index of the
// closest member. H is the truncation size, R the number of candidates
// proposed per EM iteration.
template <std::floating_point T>
class TruncationState {
public:
    TruncationState(std::size_t n_points, std::size_t n_clusters, std::size_t truncation, std::size_t candidates)
        : n_points_(n_points), n_clusters_(n_clusters), truncation_(truncation), candidates_(candidates) {
        if (n_points == 0) {
            throw usage_error("truncation state needs at least one point");
        }
        if (truncation == 0 || truncation > n_clusters) {
            throw usage_error("truncation size H must satisfy 1 <= H <= M");
        }
        if (candidates == 0) {
            throw usage_error("candidate count R must be at least 1");
        }
        if (n_clusters > std::numeric_limits<ClusterIndex>::max()) {
            throw usage_error("too many clusters");
        }
        clusters_.assign(n_points * truncation, 0);
        distances_.assign(n_points * truncation, std::numeric_limits<T>::quiet_NaN());
        best_.assign(n_points, 0);
    }

    std::size_t n_points() const noexcept { return n_points_; }
    std::size_t n_clusters() const noexcept { return n_clusters_; }
    std::size_t truncation() const noexcept { return truncation_; }
    std::size_t candidates() const noexcept { return candidates_; }

    std::span<ClusterIndex> clusters(std::size_t n) noexcept { return {clusters_.data() + n * truncation_, truncation_}; }
    std::span<const ClusterIndex> clusters(std::size_t n) const noexcept {
        return {clusters_.data() + n * truncation_, truncation_};
    }

    // Aligned with clusters(n).
    std::span<T> distances(std::size_t n) noexcept { return {distances_.data() + n * truncation_, truncation_}; }
    std::span<const T> distances(std::size_t n) const noexcept {
        return {distances_.data() + n * truncation_, truncation_};
    }

    ClusterIndex best(std::size_t n) const noexcept { return best_[n]; }
    void set_best(std::size_t n, ClusterIndex c) noexcept { best_[n] = c; }

    bool operator==(const TruncationState&) const = default;

private:
    std::size_t n_points_;
    std::size_t n_clusters_;
    std::size_t truncation_;
    std::size_t candidates_;
    std::vector<ClusterIndex> clusters_;
    std::vector<T> distances_;
    std::vector<ClusterIndex> best_;
};

// Sparse posterior q(n) over K(n), aligned with TruncationState::clusters(n).
template <std::floating_point T>
class Responsibilities {
public:
    Responsibilities(std::size_t n_points, std::size_t truncation)
        : truncation_(truncation), probs_(n_points * truncation, T{0}) {}

    std::size_t n_points() const noexcept { return truncation_ == 0 ? 0 : probs_.size() / truncation_; }
    std::size_t truncation() const noexcept { return truncation_; }

    std::span<T> operator[](std::size_t n) noexcept { return {probs_.data() + n * truncation_, truncation_}; }
    std::span<const T> operator[](std::size_t n) const noexcept {
        return {probs_.data() + n * truncation_, truncation_};
    }

private:
    std::size_t truncation_;
    std::vector<T> probs_;
};

// Dense symmetric M x M cluster co-affinity.
template <std::floating_point T>
class SimilarityMatrix {
public:
    explicit SimilarityMatrix(std::size_t n_clusters)
        : n_clusters_(n_clusters), entries_(n_clusters * n_clusters, T{0}) {}

    std::size_t n_clusters() const noexcept { return n_clusters_; }
    T operator()(std::size_t i, std::size_t j) const noexcept { return entries_[i * n_clusters_ + j]; }
    T& operator()(std::size_t i, std::size_t j) noexcept { return entries_[i * n_clusters_ + j]; }
    std::span<const T> row(std::size_t i) const noexcept { return {entries_.data() + i * n_clusters_, n_clusters_}; }

    bool operator==(const SimilarityMatrix&) const = default;

private:
    std::size_t n_clusters_;
    std::vector<T> entries_;
};

} // namespace sgmm
