// Dense row-major matrices, observation sets and isotropic GMM parameters.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace sgmm {

template <std::floating_point T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, T fill = T{0})
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<T> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_) {
            throw usage_error("matrix storage size does not match rows * cols");
        }
    }

    Matrix(std::initializer_list<std::initializer_list<T>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        values_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) {
                throw usage_error("ragged matrix initializer");
            }
            values_.insert(values_.end(), r.begin(), r.end());
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return values_.empty(); }

    std::span<T> row(std::size_t i) noexcept { return {values_.data() + i * cols_, cols_}; }
    std::span<const T> row(std::size_t i) const noexcept { return {values_.data() + i * cols_, cols_}; }

    T& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }
    T operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> values_;
};

// N x D observations with optional positive per-row weights (coresets).
// An empty weight vector means every row has weight 1.
template <std::floating_point T>
class DataMatrix {
public:
    explicit DataMatrix(Matrix<T> values, std::vector<T> weights = {})
        : values_(std::move(values)), weights_(std::move(weights)) {
        if (values_.rows() == 0) {
            throw usage_error("data matrix has no points");
        }
        if (values_.cols() == 0) {
            throw usage_error("data matrix has zero dimensions");
        }
        for (T v : values_.values()) {
            if (!std::isfinite(v)) {
                throw usage_error("data matrix contains a non-finite value");
            }
        }
        if (!weights_.empty()) {
            if (weights_.size() != values_.rows()) {
                throw usage_error("weight count does not match the number of points");
            }
            for (T w : weights_) {
                if (!(w > T{0}) || !std::isfinite(w)) {
                    throw usage_error("weights must be positive and finite");
                }
            }
        }
        total_weight_ = T{0};
        for (std::size_t n = 0; n < n_points(); ++n) {
            total_weight_ += weight(n);
        }
        variance_floor_ = compute_variance_floor();
    }

    std::size_t n_points() const noexcept { return values_.rows(); }
    std::size_t dim() const noexcept { return values_.cols(); }
    std::span<const T> row(std::size_t n) const noexcept { return values_.row(n); }
    const Matrix<T>& values() const noexcept { return values_; }

    bool weighted() const noexcept { return !weights_.empty(); }
    std::span<const T> weights() const noexcept { return weights_; }
    T weight(std::size_t n) const noexcept { return weights_.empty() ? T{1} : weights_[n]; }
    T total_weight() const noexcept { return total_weight_; }

    // Lower bound for the model variance: 1e-10 times the mean per-dimension
    // (weighted) data variance. Never below the smallest normal value.
    T variance_floor() const noexcept { return variance_floor_; }

private:
    T compute_variance_floor() const {
        const std::size_t D = dim();
        std::vector<T> mean(D, T{0});
        for (std::size_t n = 0; n < n_points(); ++n) {
            const auto y = row(n);
            const T w = weight(n);
            for (std::size_t d = 0; d < D; ++d) {
                mean[d] += w * y[d];
            }
        }
        for (auto& m : mean) {
            m /= total_weight_;
        }
        T scatter{0};
        for (std::size_t n = 0; n < n_points(); ++n) {
            const auto y = row(n);
            const T w = weight(n);
            for (std::size_t d = 0; d < D; ++d) {
                const T diff = y[d] - mean[d];
                scatter += w * diff * diff;
            }
        }
        const T mean_variance = scatter / (total_weight_ * static_cast<T>(D));
        return std::max(T{1e-10} * mean_variance, std::numeric_limits<T>::min());
    }

    Matrix<T> values_;
    std::vector<T> weights_;
    T total_weight_{0};
    T variance_floor_{0};
};

// M cluster means plus one shared isotropic variance. The mixing prior is
// uniform (1/M) and is not stored.
template <std::floating_point T>
struct ModelParams {
    Matrix<T> means;
    T variance{1};

    std::size_t n_clusters() const noexcept { return means.rows(); }
    std::size_t dim() const noexcept { return means.cols(); }

    void validate() const {
        if (means.rows() == 0) {
            throw usage_error("model needs at least one cluster");
        }
        if (!(variance > T{0}) || !std::isfinite(variance)) {
            throw usage_error("model variance must be positive and finite");
        }
        for (T v : means.values()) {
            if (!std::isfinite(v)) {
                throw usage_error("model means contain a non-finite value");
            }
        }
    }
};

} // namespace sgmm
