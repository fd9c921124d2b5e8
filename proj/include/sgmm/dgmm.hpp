// Truncated variational EM for isotropic GMMs with similarity-guided
// candidate sampling (D-GMM).
//
// One step():
//   1. for every datapoint, propose up to R clusters from the similarity row
//      of its closest member and keep the H closest of K(n) plus proposals;
//   2. truncated posteriors q(n) over K(n) with the current variance;
//   3. rebuild the similarity matrix from this iteration's distances;
//   4. new means, then distances to the new means and the new variance;
//   5. free energy of (q, new parameters).
// The E-step costs at most N (H + R) distance evaluations, the variance
// update N H. The free energy after each step is non-decreasing.
#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "distance.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "fit_trace.hpp"
#include "matrix.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "truncation_state.hpp"

namespace sgmm {

struct DgmmOptions {
    std::size_t truncation = 5; // H
    std::size_t candidates = 5; // R
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

// sigma^2_0 = (1 / D) * weighted mean over n of min_{c in K(n)} d_c(n), floored.
template <std::floating_point T>
T initial_variance(const DataMatrix<T>& data, const TruncationState<T>& state) {
    T sum{0};
    for (std::size_t n = 0; n < data.n_points(); ++n) {
        const auto d = state.distances(n);
        sum += data.weight(n) * *std::min_element(d.begin(), d.end());
    }
    const T variance = sum / (static_cast<T>(data.dim()) * data.total_weight());
    return std::max(variance, data.variance_floor());
}

// `data` must outlive the model.
template <std::floating_point T>
class Dgmm {
public:
    Dgmm(const DataMatrix<T>& data, Matrix<T> initial_means, DgmmOptions options,
         std::optional<T> variance = std::nullopt)
        : data_(data),
          options_(options),
          params_{std::move(initial_means), T{1}},
          state_(init_truncation<T>(data.n_points(), params_.n_clusters(), options.truncation, options.candidates,
                                    options.seed)),
          resp_(data.n_points(), options.truncation),
          similarity_(params_.n_clusters()) {
        if (params_.dim() != data.dim()) {
            throw usage_error("initial means do not match the data dimension");
        }
        refresh_distances(data_, state_, params_.means, init_counter_, options_.threads);
        params_.variance = variance ? std::max(*variance, data.variance_floor()) : initial_variance(data_, state_);
        params_.validate();
        resp_ = compute_responsibilities(state_, params_.variance, options_.threads);
        free_energy_ = free_energy_cached(data_, resp_, state_, params_.variance, options_.threads);
    }

    IterationStats<T> step() {
        ++iteration_;
        const std::size_t N = data_.n_points();
        const bool full = state_.truncation() == state_.n_clusters();

        std::vector<DistanceCounter> tallies(chunk_count(N));
        for_each_chunk(N, options_.threads, [&](std::size_t begin, std::size_t end) {
            DistanceCounter& local = tallies[begin / kChunkSize];
            std::vector<ClusterIndex> proposals;
            for (std::size_t n = begin; n < end; ++n) {
                proposals.clear();
                if (!full) {
                    const auto dist = conditional_distribution(similarity_, state_.best(n), state_.clusters(n));
                    if (dist) {
                        RngStream rng(options_.seed, StreamDomain::candidate_sampling, n,
                                      static_cast<std::uint32_t>(iteration_));
                        proposals = sample_candidates(*dist, state_.candidates(), rng);
                    }
                }
                update_truncation(state_, n, proposals, data_.row(n), params_.means, local);
            }
        });
        DistanceCounter estep;
        for (const auto& t : tallies) {
            estep.merge(t);
        }

        resp_ = compute_responsibilities(state_, params_.variance, options_.threads);
        similarity_ = similarity_from_responsibilities(state_, params_.variance, data_, options_.threads);

        Matrix<T> means = m_step_means(data_, resp_, state_, params_.means, options_.threads);
        DistanceCounter mstep;
        refresh_distances(data_, state_, means, mstep, options_.threads);
        params_.means = std::move(means);
        params_.variance = m_step_variance_cached(data_, resp_, state_, options_.threads);
        free_energy_ = free_energy_cached(data_, resp_, state_, params_.variance, options_.threads);

        fit_counter_.merge(estep);
        fit_counter_.merge(mstep);

        IterationStats<T> stats;
        stats.iteration = iteration_;
        stats.objective = free_energy_;
        stats.variance = params_.variance;
        stats.estep_evals = estep.count();
        stats.mstep_evals = mstep.count();
        return stats;
    }

    FitTrace fit(double eps, std::size_t max_iters) { return fit_free_energy(*this, eps, max_iters); }

    const ModelParams<T>& params() const noexcept { return params_; }
    const TruncationState<T>& state() const noexcept { return state_; }
    const Responsibilities<T>& responsibilities() const noexcept { return resp_; }
    const SimilarityMatrix<T>& similarity() const noexcept { return similarity_; }
    T free_energy() const noexcept { return free_energy_; }
    std::size_t iteration() const noexcept { return iteration_; }
    std::uint64_t init_evals() const noexcept { return init_counter_.count(); }
    std::uint64_t fit_evals() const noexcept { return fit_counter_.count(); }

private:
    const DataMatrix<T>& data_;
    DgmmOptions options_;
    ModelParams<T> params_;
    TruncationState<T> state_;
    Responsibilities<T> resp_;
    SimilarityMatrix<T> similarity_;
    T free_energy_{0};
    std::size_t iteration_ = 0;
    DistanceCounter init_counter_;
    DistanceCounter fit_counter_;
};

} // namespace sgmm
