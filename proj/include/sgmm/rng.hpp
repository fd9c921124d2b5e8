// Counter-based random streams.
//
// A stream is addressed by (seed, domain, index, step): the same address
// always yields the same sequence, no matter which thread asks for it or
// in which order. Blocks come from Philox4x32-10 (Salmon et al., SC'11).
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>
#include <algorithm>

#include "errors.hpp"

namespace sgmm {

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

} // namespace detail

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += detail::kPhiloxW0;
            key[1] += detail::kPhiloxW1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(detail::kPhiloxM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(detail::kPhiloxM1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
               static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
               static_cast<std::uint32_t>(p0)};
    }
    return ctr;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Independent purposes draw from disjoint streams.
enum class StreamDomain : std::uint16_t {
    truncation_init = 1,
    candidate_sampling = 2,
    seeding = 3,
    coreset = 4,
    synthetic = 5,
    test = 100,
};

class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, StreamDomain domain, std::uint64_t index = 0, std::uint32_t step = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          base_{0u, step, static_cast<std::uint32_t>(index),
                (static_cast<std::uint32_t>(index >> 32) << 16) | static_cast<std::uint32_t>(domain)} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (pos_ == 2) {
            PhiloxCounter ctr = base_;
            ctr[0] = block_++;
            const auto out = philox4x32_10(ctr, key_);
            buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
            buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
            pos_ = 0;
        }
        return buffer_[pos_++];
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform on {0, ..., bound - 1} (Lemire's multiply-and-reject).
    std::uint64_t uniform_index(std::uint64_t bound) {
        if (bound == 0) {
            throw usage_error("uniform_index: empty range");
        }
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

private:
    PhiloxKey key_;
    PhiloxCounter base_;
    std::uint32_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int pos_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Sampling from a fixed nonnegative weight vector by inverse CDF.
class DiscreteSampler {
public:
    explicit DiscreteSampler(std::span<const double> weights) : cumulative_(weights.size()) {
        double total = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
                throw usage_error("DiscreteSampler: weights must be finite and nonnegative");
            }
            total += weights[i];
            cumulative_[i] = total;
        }
        if (!(total > 0.0)) {
            throw usage_error("DiscreteSampler: weights sum to zero");
        }
    }

    double total() const noexcept { return cumulative_.back(); }
    std::size_t size() const noexcept { return cumulative_.size(); }

    std::size_t operator()(RngStream& rng) const {
        const double target = rng.uniform() * total();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
        if (it == cumulative_.end()) {
            // target rounded up to the total; take the last positive entry
            auto last = cumulative_.size() - 1;
            while (last > 0 && cumulative_[last - 1] == cumulative_[last]) {
                --last;
            }
            return last;
        }
        return static_cast<std::size_t>(it - cumulative_.begin());
    }

private:
    std::vector<double> cumulative_;
};

} // namespace sgmm
