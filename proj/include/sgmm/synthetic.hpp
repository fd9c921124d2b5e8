// Gaussian blobs around random centers (S-set style test data).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace sgmm {

struct SyntheticData {
    DataMatrix<double> data;
    Matrix<double> centers;
    std::vector<std::uint32_t> labels;
};

// Centers are uniform in a box of side L = max(1, 4 spread sqrt(6 / D)), so
// the root-mean-square distance between two centers, L sqrt(D / 6), is at
// least 4 spread. Each point picks a center uniformly and adds N(0, spread^2 I).
inline SyntheticData generate_synthetic(std::size_t n_points, std::size_t n_centers, std::size_t dim, double spread,
                                        std::uint64_t seed) {
    if (n_points == 0 || n_centers == 0 || dim == 0) {
        throw usage_error("generate_synthetic: counts must be positive");
    }
    if (!(spread >= 0.0) || !std::isfinite(spread)) {
        throw usage_error("generate_synthetic: spread must be finite and nonnegative");
    }
    const double side = std::max(1.0, 4.0 * spread * std::sqrt(6.0 / static_cast<double>(dim)));
    RngStream center_rng(seed, StreamDomain::synthetic, 0);
    Matrix<double> centers(n_centers, dim);
    for (auto& v : centers.values()) {
        v = side * center_rng.uniform();
    }
    RngStream point_rng(seed, StreamDomain::synthetic, 1);
    Matrix<double> values(n_points, dim);
    std::vector<std::uint32_t> labels(n_points);
    for (std::size_t n = 0; n < n_points; ++n) {
        const auto label = static_cast<std::uint32_t>(point_rng.uniform_index(n_centers));
        labels[n] = label;
        const auto mu = centers.row(label);
        auto y = values.row(n);
        for (std::size_t d = 0; d < dim; ++d) {
            y[d] = mu[d] + spread * point_rng.normal();
        }
    }
    return {DataMatrix<double>(std::move(values)), std::move(centers), std::move(labels)};
}

} // namespace sgmm
