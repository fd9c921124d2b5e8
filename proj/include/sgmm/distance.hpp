// Instrumented squared Euclidean distance kernel.
//
// Every ||y - mu||^2 evaluated by the library goes through the counted
// overload, which makes the distance tallies in fit reports exact.
#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>

#include "errors.hpp"

namespace sgmm {

class DistanceCounter {
public:
    void add(std::uint64_t k = 1) noexcept { count_ += k; }
    void merge(const DistanceCounter& other) noexcept { count_ += other.count_; }
    void reset() noexcept { count_ = 0; }
    std::uint64_t count() const noexcept { return count_; }

private:
    std::uint64_t count_ = 0;
};

// Uncounted kernel. Four independent partial sums keep the result
// independent of compiler vectorisation choices.
template <std::floating_point T>
T squared_distance(std::span<const T> y, std::span<const T> mu) {
    if (y.size() != mu.size()) {
        throw usage_error("squared_distance: dimension mismatch");
    }
    const std::size_t D = y.size();
    T acc0{0}, acc1{0}, acc2{0}, acc3{0};
    std::size_t d = 0;
    for (; d + 4 <= D; d += 4) {
        const T e0 = y[d] - mu[d];
        const T e1 = y[d + 1] - mu[d + 1];
        const T e2 = y[d + 2] - mu[d + 2];
        const T e3 = y[d + 3] - mu[d + 3];
        acc0 += e0 * e0;
        acc1 += e1 * e1;
        acc2 += e2 * e2;
        acc3 += e3 * e3;
    }
    for (; d < D; ++d) {
        const T e = y[d] - mu[d];
        acc0 += e * e;
    }
    return (acc0 + acc1) + (acc2 + acc3);
}

template <std::floating_point T>
T squared_distance(std::span<const T> y, std::span<const T> mu, DistanceCounter& counter) {
    const T d = squared_distance(y, mu);
    counter.add();
    return d;
}

} // namespace sgmm
