#pragma once

// Seeded synthetic data for self-tests and benchmarks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fastforward/forward_index.hpp"
#include "fastforward/run.hpp"

namespace fastforward::synthetic {

using Rng = std::mt19937_64;

/// Sparse scores sorted descending with their paired dense scores.
struct ScoreInstance {
    std::vector<double> sparse;
    std::vector<double> dense;
};

inline std::string doc_name(std::size_t i) { return "d" + std::to_string(i); }

/// Sparse ranking with document IDs d0, d1, ... in the instance's order.
inline QueryRanking to_ranking(const ScoreInstance& inst) {
    QueryRanking r;
    r.reserve(inst.sparse.size());
    for (std::size_t i = 0; i < inst.sparse.size(); ++i) {
        r.push_back({doc_name(i), inst.sparse[i]});
    }
    return r;
}

inline void sort_by_sparse(ScoreInstance& inst) {
    std::vector<std::size_t> order(inst.sparse.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return inst.sparse[a] > inst.sparse[b]; });
    ScoreInstance sorted;
    for (auto i : order) {
        sorted.sparse.push_back(inst.sparse[i]);
        sorted.dense.push_back(inst.dense[i]);
    }
    inst = std::move(sorted);
}

/// Independent sparse and dense scores on unrelated scales.
inline ScoreInstance random_instance(Rng& rng, std::size_t n) {
    std::uniform_real_distribution<double> sparse(0.0, 30.0);
    std::normal_distribution<double> dense(std::uniform_real_distribution<double>(-5.0, 5.0)(rng),
                                           std::uniform_real_distribution<double>(0.1, 10.0)(rng));
    ScoreInstance inst;
    for (std::size_t i = 0; i < n; ++i) {
        inst.sparse.push_back(sparse(rng));
        inst.dense.push_back(dense(rng));
    }
    sort_by_sparse(inst);
    return inst;
}

/// Standard-normal scores with correlation `rho` between sparse and dense.
inline ScoreInstance correlated_instance(Rng& rng, std::size_t n, double rho) {
    std::normal_distribution<double> normal(0.0, 1.0);
    ScoreInstance inst;
    const double rest = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = normal(rng);
        inst.sparse.push_back(z);
        inst.dense.push_back(rho * z + rest * normal(rng));
    }
    sort_by_sparse(inst);
    return inst;
}

inline std::vector<double> ranks_of(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        ranks[order[r]] = static_cast<double>(r);
    }
    return ranks;
}

/// Spearman rank correlation (no tie correction).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = ranks_of(a);
    const auto rb = ranks_of(b);
    const auto n = static_cast<double>(a.size());
    const double m = (n - 1.0) / 2.0;
    double num = 0.0;
    double da = 0.0;
    double db = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (ra[i] - m) * (rb[i] - m);
        da += (ra[i] - m) * (ra[i] - m);
        db += (rb[i] - m) * (rb[i] - m);
    }
    return num / std::sqrt(da * db);
}

inline std::vector<float> gaussian_vector(Rng& rng, std::size_t dim, double sigma = 1.0) {
    std::normal_distribution<float> normal(0.0F, static_cast<float>(sigma));
    std::vector<float> v(dim);
    for (auto& x : v) {
        x = normal(rng);
    }
    return v;
}

/// Index of `docs` documents with 1..max_passages i.i.d. Gaussian passage vectors each.
inline ForwardIndex random_index(Rng& rng, std::size_t docs, std::size_t dim, std::size_t max_passages) {
    ForwardIndex index(dim);
    std::uniform_int_distribution<std::size_t> count(1, max_passages);
    std::vector<float> block;
    for (std::size_t d = 0; d < docs; ++d) {
        block.clear();
        const auto n = count(rng);
        for (std::size_t p = 0; p < n; ++p) {
            auto v = gaussian_vector(rng, dim);
            block.insert(block.end(), v.begin(), v.end());
        }
        index.add_document(doc_name(d), block);
    }
    return index;
}

/// Index with topical locality: each document is a sequence of topic segments, every passage
/// of a segment being its topic centre plus Gaussian noise of scale `noise`.
inline ForwardIndex clustered_index(Rng& rng, std::size_t docs, std::size_t dim, std::size_t max_passages,
                                    double noise = 0.3) {
    ForwardIndex index(dim);
    std::uniform_int_distribution<std::size_t> count(1, max_passages);
    std::geometric_distribution<std::size_t> segment(0.3);
    std::vector<float> block;
    for (std::size_t d = 0; d < docs; ++d) {
        block.clear();
        const auto n = count(rng);
        std::size_t produced = 0;
        while (produced < n) {
            const auto centre = gaussian_vector(rng, dim);
            const auto len = std::min(n - produced, 1 + segment(rng));
            for (std::size_t p = 0; p < len; ++p) {
                auto v = gaussian_vector(rng, dim, noise);
                for (std::size_t i = 0; i < dim; ++i) {
                    v[i] += centre[i];
                }
                block.insert(block.end(), v.begin(), v.end());
            }
            produced += len;
        }
        index.add_document(doc_name(d), block);
    }
    return index;
}

/// A sparse ranking over `docs` of the index (first `n` documents, random descending scores).
inline QueryRanking random_sparse_ranking(Rng& rng, const ForwardIndex& index, std::size_t n) {
    std::uniform_real_distribution<double> score(0.0, 40.0);
    std::vector<double> scores(std::min(n, index.size()));
    for (auto& s : scores) {
        s = score(rng);
    }
    std::sort(scores.begin(), scores.end(), std::greater<>());
    QueryRanking r;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        r.push_back({std::string(index.doc_id_at(i)), scores[i]});
    }
    return r;
}

} // namespace fastforward::synthetic
