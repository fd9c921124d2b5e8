// Deterministic chunked parallelism.
//
// Work over N items is cut into fixed-size chunks. Reductions give every
// chunk its own accumulator and merge them strictly in chunk order, so the
// result is bitwise identical for any thread count.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sgmm {

inline constexpr std::size_t kChunkSize = 1024;

inline std::size_t chunk_count(std::size_t n) noexcept { return (n + kChunkSize - 1) / kChunkSize; }

// Calls fn(i) for every i in [0, count) on up to `threads` workers.
template <class Fn>
void parallel_indices(std::size_t count, std::size_t threads, Fn&& fn) {
    const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                fn(i);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) {
                failure = std::current_exception();
            }
            next.store(count);
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        worker();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

// Calls body(begin, end) for every chunk of [0, n).
template <class Body>
void for_each_chunk(std::size_t n, std::size_t threads, Body&& body) {
    parallel_indices(chunk_count(n), threads, [&](std::size_t c) {
        const std::size_t begin = c * kChunkSize;
        body(begin, std::min(n, begin + kChunkSize));
    });
}

// process(acc, begin, end) fills a fresh copy of `zero` per chunk;
// merge(acc) is then called for each chunk in increasing chunk order.
// At most `threads` accumulators are alive at once.
template <class Acc, class Process, class Merge>
void chunked_reduce(std::size_t n, std::size_t threads, const Acc& zero, Process&& process, Merge&& merge) {
    const std::size_t chunks = chunk_count(n);
    const std::size_t wave = std::max<std::size_t>(1, std::min(threads, chunks));
    std::vector<Acc> accs(wave, zero);
    for (std::size_t first = 0; first < chunks; first += wave) {
        const std::size_t in_wave = std::min(wave, chunks - first);
        parallel_indices(in_wave, threads, [&](std::size_t i) {
            accs[i] = zero;
            const std::size_t begin = (first + i) * kChunkSize;
            process(accs[i], begin, std::min(n, begin + kChunkSize));
        });
        for (std::size_t i = 0; i < in_wave; ++i) {
            merge(accs[i]);
        }
    }
}

} // namespace sgmm
