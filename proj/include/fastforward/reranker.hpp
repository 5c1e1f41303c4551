#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fastforward/error.hpp"
#include "fastforward/forward_index.hpp"
#include "fastforward/parallel.hpp"
#include "fastforward/run.hpp"
#include "fastforward/vector.hpp"

namespace fastforward {

enum class StopMode {
    exhaustive,
    /// Early stopping with the highest dense score observed so far as the dense upper bound.
    running_max,
    /// Early stopping with a caller-supplied dense upper bound.
    with_bound,
};

/// What to do when a candidate document has no entry in the forward index.
enum class MissingPolicy {
    abort,
    /// The document keeps only its weighted sparse score, alpha * sparse.
    skip,
};

struct InterpolationConfig {
    double alpha = 0.5;
    std::size_t k_s = 1000;
    std::size_t k = 1000;
    StopMode mode = StopMode::exhaustive;
    double dense_bound = 0.0;
    MissingPolicy missing = MissingPolicy::abort;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) {
            throw DomainError("alpha must lie in [0, 1]");
        }
        if (k == 0 || k > k_s) {
            throw DomainError("cut-off depth k must satisfy 1 <= k <= k_s");
        }
        if (mode == StopMode::with_bound && !std::isfinite(dense_bound)) {
            throw DomainError("dense score bound must be finite");
        }
    }
};

struct RerankStats {
    std::size_t queries = 0;
    /// Dense score computations (forward index look-ups that hit).
    std::size_t lookups = 0;
    std::size_t early_stops = 0;
    std::size_t missing = 0;

    RerankStats& operator+=(const RerankStats& o) noexcept {
        queries += o.queries;
        lookups += o.lookups;
        early_stops += o.early_stops;
        missing += o.missing;
        return *this;
    }
};

/// alpha * sparse + (1 - alpha) * dense.
inline double interpolate(double sparse, double dense, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw DomainError("alpha must lie in [0, 1]");
    }
    return alpha * sparse + (1.0 - alpha) * dense;
}

/// Probability bound that the maximum of n i.i.d. draws lies below the (1 - eps) quantile of
/// their distribution: exp(-2 n eps^2).
inline double dkw_bound(std::size_t n, double eps) {
    return std::exp(-2.0 * static_cast<double>(n) * eps * eps);
}

/// One re-scored candidate. `sparse_rank` is the 0-based position in the sparse ranking.
struct ScoredDoc {
    double score;
    std::size_t sparse_rank;
};

/// Strict total order used for every ranking decision: higher score first, then better sparse
/// rank.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) noexcept {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.sparse_rank < b.sparse_rank;
}

namespace detail {

template <typename DenseScorer>
double dense_score(const RunEntry& doc, DenseScorer& scorer, MissingPolicy policy, RerankStats& stats) {
    const std::optional<double> s = scorer(std::string_view(doc.doc_id));
    if (s) {
        ++stats.lookups;
        return *s;
    }
    if (policy == MissingPolicy::abort) {
        throw MissingDocumentError(doc.doc_id);
    }
    ++stats.missing;
    return 0.0;
}

inline std::span<const RunEntry> truncate(std::span<const RunEntry> sparse, std::size_t k_s) {
    return sparse.first(std::min(sparse.size(), k_s));
}

} // namespace detail

/// Interpolates every candidate (truncated to k_s). Result is unordered.
template <typename DenseScorer>
std::vector<ScoredDoc> score_candidates(std::span<const RunEntry> sparse, DenseScorer&& scorer,
                                        const InterpolationConfig& cfg, RerankStats& stats) {
    const auto cands = detail::truncate(sparse, cfg.k_s);
    std::vector<ScoredDoc> out;
    out.reserve(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const double dense = detail::dense_score(cands[i], scorer, cfg.missing, stats);
        out.push_back({interpolate(cands[i].score, dense, cfg.alpha), i});
    }
    return out;
}

/// Keeps the best k scored documents, sorted.
inline std::vector<ScoredDoc> select_top_k(std::vector<ScoredDoc> scored, std::size_t k) {
    const auto n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                      ranks_before);
    scored.resize(n);
    return scored;
}

/// Interpolation with early stopping over candidates sorted by sparse score.
///
/// A size-k queue holds the best interpolated scores seen so far. Once it is full, each step
/// removes its minimum s_min and computes the best score the current document could reach,
/// alpha * sparse + (1 - alpha) * s_D. If that cannot beat s_min the minimum is restored and
/// iteration stops; otherwise the document is looked up and the better of it and s_min goes
/// back in. s_D is the supplied bound or the running maximum of looked-up dense scores.
/// Returns the queue contents, unordered.
template <typename DenseScorer>
std::vector<ScoredDoc> early_stop_candidates(std::span<const RunEntry> sparse, DenseScorer&& scorer,
                                             const InterpolationConfig& cfg, RerankStats& stats) {
    const auto cands = detail::truncate(sparse, cfg.k_s);
    const double alpha = cfg.alpha;
    const bool fixed_bound = cfg.mode == StopMode::with_bound;
    double s_d = fixed_bound ? cfg.dense_bound : -std::numeric_limits<double>::infinity();
    // The queue front is its worst element.
    std::vector<ScoredDoc> queue;
    queue.reserve(cfg.k + 1);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        std::optional<ScoredDoc> s_min;
        if (queue.size() == cfg.k) {
            std::pop_heap(queue.begin(), queue.end(), ranks_before);
            s_min = queue.back();
            queue.pop_back();
            // 0 * -inf would be NaN; with alpha == 1 the dense term vanishes.
            const double dense_term = alpha == 1.0 ? 0.0 : (1.0 - alpha) * s_d;
            const double s_best = alpha * cands[i].score + dense_term;
            if (s_best <= s_min->score) {
                queue.push_back(*s_min);
                std::push_heap(queue.begin(), queue.end(), ranks_before);
                ++stats.early_stops;
                break;
            }
        }
        const double dense = detail::dense_score(cands[i], scorer, cfg.missing, stats);
        if (!fixed_bound) {
            s_d = std::max(dense, s_d);
        }
        const ScoredDoc current{interpolate(cands[i].score, dense, alpha), i};
        queue.push_back(s_min && ranks_before(*s_min, current) ? *s_min : current);
        std::push_heap(queue.begin(), queue.end(), ranks_before);
    }
    return queue;
}

inline QueryRanking to_ranking(std::span<const RunEntry> sparse, std::vector<ScoredDoc> scored) {
    std::sort(scored.begin(), scored.end(), ranks_before);
    QueryRanking out;
    out.reserve(scored.size());
    for (const auto& s : scored) {
        out.push_back({sparse[s.sparse_rank].doc_id, s.score});
    }
    return out;
}

/// Re-ranks one query's sparse candidates with the configured mode.
template <typename DenseScorer>
QueryRanking rerank_query(std::span<const RunEntry> sparse, DenseScorer&& scorer, const InterpolationConfig& cfg,
                          RerankStats& stats) {
    cfg.validate();
    ++stats.queries;
    if (cfg.mode == StopMode::exhaustive) {
        return to_ranking(sparse, select_top_k(score_candidates(sparse, scorer, cfg, stats), cfg.k));
    }
    return to_ranking(sparse, early_stop_candidates(sparse, scorer, cfg, stats));
}

/// Dense scorer backed by a forward index: maxP score of the query against a document, or
/// nothing when the document is not indexed.
class IndexScorer {
  public:
    IndexScorer(const ForwardIndex& index, const DenseVector& query) : index_(&index), query_(&query) {
        if (query.dim() != index.dim()) {
            throw DimensionError(index.dim(), query.dim());
        }
    }

    std::optional<double> operator()(std::string_view doc_id) const {
        auto pv = index_->find(doc_id);
        if (!pv) {
            return std::nullopt;
        }
        return score_maxp(*pv, query_->values());
    }

  private:
    const ForwardIndex* index_;
    const DenseVector* query_;
};

struct RerankOutcome {
    QueryRanking ranking;
    RerankStats stats;
};

inline RerankOutcome rerank_exhaustive(const QueryRanking& sparse, const ForwardIndex& index,
                                       const DenseVector& query, InterpolationConfig cfg) {
    cfg.mode = StopMode::exhaustive;
    RerankOutcome out;
    out.ranking = rerank_query(sparse, IndexScorer(index, query), cfg, out.stats);
    return out;
}

inline RerankOutcome rerank_early_stop(const QueryRanking& sparse, const ForwardIndex& index,
                                       const DenseVector& query, const InterpolationConfig& cfg) {
    if (cfg.mode == StopMode::exhaustive) {
        throw DomainError("rerank_early_stop requires an early-stopping mode");
    }
    RerankOutcome out;
    out.ranking = rerank_query(sparse, IndexScorer(index, query), cfg, out.stats);
    return out;
}

using QueryVectors = std::map<std::string, DenseVector, std::less<>>;

struct RunRerankResult {
    RankedRun run;
    RerankStats stats;
};

/// Re-ranks every query of a sparse run against a shared forward index. Queries are processed
/// independently on up to `threads` workers; output is identical for any thread count.
inline RunRerankResult rerank_run(const RankedRun& sparse, const ForwardIndex& index, const QueryVectors& queries,
                                  const InterpolationConfig& cfg, std::size_t threads = 1,
                                  std::string tag = "fast-forward") {
    cfg.validate();
    std::vector<const std::pair<const std::string, QueryRanking>*> items;
    items.reserve(sparse.queries.size());
    for (const auto& q : sparse.queries) {
        items.push_back(&q);
    }
    std::vector<QueryRanking> rankings(items.size());
    std::vector<RerankStats> stats(items.size());
    parallel_for(items.size(), threads, [&](std::size_t i) {
        const auto& [qid, ranking] = *items[i];
        auto it = queries.find(qid);
        if (it == queries.end()) {
            throw MissingQueryError(qid);
        }
        rankings[i] = rerank_query(ranking, IndexScorer(index, it->second), cfg, stats[i]);
    });
    RunRerankResult out;
    out.run.tag = std::move(tag);
    for (std::size_t i = 0; i < items.size(); ++i) {
        out.run.queries.emplace(items[i]->first, std::move(rankings[i]));
        out.stats += stats[i];
    }
    return out;
}

struct HybridResult {
    RankedRun run;
    /// Queries of the sparse run that had no dense ranking at all.
    std::size_t fallback_queries = 0;
};

/// Hybrid scoring over the sparse candidate set: documents with a dense score are
/// interpolated, the others fall back to their sparse score. Dense-only documents are dropped.
inline HybridResult hybrid_score(const RankedRun& sparse, const RankedRun& dense, double alpha,
                                 std::string tag = "hybrid") {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw DomainError("alpha must lie in [0, 1]");
    }
    HybridResult out;
    out.run.tag = std::move(tag);
    for (const auto& [qid, ranking] : sparse.queries) {
        std::unordered_map<std::string_view, double> dense_scores;
        if (auto it = dense.queries.find(qid); it != dense.queries.end()) {
            for (const auto& e : it->second) {
                dense_scores.emplace(e.doc_id, e.score);
            }
        } else {
            ++out.fallback_queries;
        }
        std::vector<ScoredDoc> scored;
        scored.reserve(ranking.size());
        for (std::size_t i = 0; i < ranking.size(); ++i) {
            auto d = dense_scores.find(ranking[i].doc_id);
            const double s = d == dense_scores.end() ? ranking[i].score : interpolate(ranking[i].score, d->second, alpha);
            scored.push_back({s, i});
        }
        out.run.queries.emplace(qid, to_ranking(ranking, std::move(scored)));
    }
    return out;
}

} // namespace fastforward
