#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "fastforward/error.hpp"

namespace fastforward {

/// Fixed-dimension embedding stored in single precision. All reductions over dense vectors
/// accumulate in double.
class DenseVector {
  public:
    DenseVector() = default;

    explicit DenseVector(std::vector<float> values) : values_(std::move(values)) { validate(); }

    DenseVector(std::initializer_list<float> values) : values_(values) { validate(); }

    explicit DenseVector(std::span<const float> values) : values_(values.begin(), values.end()) {
        validate();
    }

    static DenseVector zeros(std::size_t dim) { return DenseVector(std::vector<float>(dim, 0.0F)); }

    [[nodiscard]] std::size_t dim() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const float> values() const noexcept { return values_; }
    [[nodiscard]] float operator[](std::size_t i) const noexcept { return values_[i]; }
    [[nodiscard]] auto begin() const noexcept { return values_.begin(); }
    [[nodiscard]] auto end() const noexcept { return values_.end(); }

    friend bool operator==(const DenseVector&, const DenseVector&) = default;

  private:
    void validate() const {
        if (!std::all_of(values_.begin(), values_.end(), [](float x) { return std::isfinite(x); })) {
            throw DomainError("dense vector contains a non-finite value");
        }
    }

    std::vector<float> values_;
};

/// Affine map `weights * v + bias`, weights stored row-major.
class Projection {
  public:
    Projection(std::size_t rows, std::size_t cols, std::vector<float> weights, DenseVector bias)
        : rows_(rows), cols_(cols), weights_(std::move(weights)), bias_(std::move(bias)) {
        if (weights_.size() != rows_ * cols_) {
            throw DimensionError(rows_ * cols_, weights_.size());
        }
        if (bias_.dim() != rows_) {
            throw DimensionError(rows_, bias_.dim());
        }
    }

    static Projection identity(std::size_t dim) {
        std::vector<float> w(dim * dim, 0.0F);
        for (std::size_t i = 0; i < dim; ++i) {
            w[i * dim + i] = 1.0F;
        }
        return {dim, dim, std::move(w), DenseVector::zeros(dim)};
    }

    [[nodiscard]] std::size_t output_dim() const noexcept { return rows_; }
    [[nodiscard]] std::size_t input_dim() const noexcept { return cols_; }
    [[nodiscard]] std::span<const float> row(std::size_t r) const noexcept {
        return std::span<const float>(weights_).subspan(r * cols_, cols_);
    }
    [[nodiscard]] const DenseVector& bias() const noexcept { return bias_; }

  private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<float> weights_;
    DenseVector bias_;
};

inline double dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw DimensionError(a.size(), b.size());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

inline double dot(const DenseVector& a, const DenseVector& b) { return dot(a.values(), b.values()); }

inline double l2_norm(std::span<const float> v) { return std::sqrt(dot(v, v)); }

inline double l2_norm(const DenseVector& v) { return l2_norm(v.values()); }

/// 1 - cosine similarity, clamped to [0, 2].
inline double cosine_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw DimensionError(a.size(), b.size());
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw ZeroVectorError();
    }
    return std::clamp(1.0 - dot(a, b) / (na * nb), 0.0, 2.0);
}

inline double cosine_distance(const DenseVector& a, const DenseVector& b) {
    return cosine_distance(a.values(), b.values());
}

/// Coordinate-wise mean of a list of equally sized float rows.
inline DenseVector mean(std::span<const std::span<const float>> rows) {
    if (rows.empty()) {
        throw EmptyInputError("mean of an empty list of vectors");
    }
    const std::size_t dim = rows.front().size();
    std::vector<double> acc(dim, 0.0);
    for (const auto& r : rows) {
        if (r.size() != dim) {
            throw DimensionError(dim, r.size());
        }
        for (std::size_t i = 0; i < dim; ++i) {
            acc[i] += r[i];
        }
    }
    std::vector<float> out(dim);
    const auto n = static_cast<double>(rows.size());
    for (std::size_t i = 0; i < dim; ++i) {
        out[i] = static_cast<float>(acc[i] / n);
    }
    return DenseVector(std::move(out));
}

inline DenseVector mean(std::span<const DenseVector> vs) {
    std::vector<std::span<const float>> rows;
    rows.reserve(vs.size());
    for (const auto& v : vs) {
        rows.push_back(v.values());
    }
    return mean(std::span<const std::span<const float>>(rows));
}

inline DenseVector l2_normalize(const DenseVector& v) {
    const double n = l2_norm(v);
    if (n == 0.0) {
        throw ZeroVectorError();
    }
    std::vector<float> out(v.dim());
    for (std::size_t i = 0; i < v.dim(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(v[i]) / n);
    }
    return DenseVector(std::move(out));
}

inline DenseVector project(const Projection& p, const DenseVector& v) {
    if (p.input_dim() != v.dim()) {
        throw DimensionError(p.input_dim(), v.dim());
    }
    std::vector<float> out(p.output_dim());
    for (std::size_t r = 0; r < p.output_dim(); ++r) {
        out[r] = static_cast<float>(dot(p.row(r), v.values()) + static_cast<double>(p.bias()[r]));
    }
    return DenseVector(std::move(out));
}

/// Softmax cross-entropy of one positive score against a list of negatives at temperature `tau`.
inline double contrastive_loss(double pos_score, std::span<const double> neg_scores, double tau) {
    if (!(tau > 0.0)) {
        throw DomainError("contrastive loss temperature must be positive");
    }
    const double pos = pos_score / tau;
    double top = pos;
    for (double s : neg_scores) {
        top = std::max(top, s / tau);
    }
    double sum = std::exp(pos - top);
    for (double s : neg_scores) {
        sum += std::exp(s / tau - top);
    }
    // -log(exp(pos) / sum(exp(all))) = logsumexp(all) - pos
    return std::max(0.0, top + std::log(sum) - pos);
}

} // namespace fastforward
