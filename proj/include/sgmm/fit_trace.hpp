// Per-iteration statistics and the shared convergence loop.
#pragma once

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "errors.hpp"

namespace sgmm {

template <std::floating_point T>
struct IterationStats {
    std::size_t iteration = 0;
    T objective{0};             // free energy after the M-step (k-means: Q before the update)
    T variance{0};
    std::uint64_t estep_evals = 0;
    std::uint64_t mstep_evals = 0;
    std::optional<T> log_likelihood; // exact EM only: log-likelihood at the pre-step parameters
};

struct FitTrace {
    std::vector<double> objective;
    std::size_t iterations = 0;
    bool converged = false;
    std::uint64_t init_evals = 0;
    std::uint64_t fit_evals = 0;
    double wall_seconds = 0.0;
};

inline void check_stopping(double eps, std::size_t max_iters) {
    if (!(eps > 0.0)) {
        throw usage_error("eps must be positive");
    }
    if (max_iters == 0) {
        throw usage_error("max_iters must be at least 1");
    }
}

// Iterates model.step() until the relative free-energy increment
// |F_t - F_{t-1}| / |F_t| drops below eps or max_iters is reached. F_0 is
// the bound at initialisation.
template <class Model>
FitTrace fit_free_energy(Model& model, double eps, std::size_t max_iters) {
    check_stopping(eps, max_iters);
    const auto start = std::chrono::steady_clock::now();
    FitTrace trace;
    trace.init_evals = model.init_evals();
    double previous = static_cast<double>(model.free_energy());
    for (std::size_t t = 0; t < max_iters; ++t) {
        const auto stats = model.step();
        const double current = static_cast<double>(stats.objective);
        trace.objective.push_back(current);
        trace.fit_evals += stats.estep_evals + stats.mstep_evals;
        ++trace.iterations;
        const double delta = std::abs(current - previous);
        previous = current;
        if (delta == 0.0 || delta < eps * std::abs(current)) {
            trace.converged = true;
            break;
        }
    }
    trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return trace;
}

} // namespace sgmm
