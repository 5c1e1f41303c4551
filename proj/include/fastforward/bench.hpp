#pragma once

#include <chrono>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>

#include "fastforward/error.hpp"
#include "fastforward/forward_index.hpp"
#include "fastforward/reranker.hpp"
#include "fastforward/run.hpp"

namespace fastforward {

/// Per-query stage latencies of the fastest repetition.
struct LatencyReport {
    double encode_ms = 0.0;
    double score_ms = 0.0; // look-up + interpolation
    double sort_ms = 0.0;
    std::size_t lookups = 0;
    std::size_t early_stops = 0;
    std::size_t queries = 0;
    std::size_t repeats = 0;

    [[nodiscard]] double total_ms() const noexcept { return encode_ms + score_ms + sort_ms; }
    [[nodiscard]] double lookups_per_query() const noexcept {
        return queries == 0 ? 0.0 : static_cast<double>(lookups) / static_cast<double>(queries);
    }
};

/// Re-ranks every query of `run` `repeats` times, single-threaded. Each repetition is timed per
/// stage; the repetition with the lowest total time is reported as per-query means.
/// `encode(query_id)` produces the query vector; tokenization belongs outside of it.
template <typename Encoder>
LatencyReport benchmark_rerank(const ForwardIndex& index, const RankedRun& run, Encoder&& encode,
                               const InterpolationConfig& cfg, std::size_t repeats) {
    if (repeats < 2) {
        throw DomainError("benchmark needs at least 2 repetitions");
    }
    cfg.validate();
    using clock = std::chrono::steady_clock;
    auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };

    LatencyReport best;
    double best_total = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < repeats; ++r) {
        LatencyReport current;
        current.repeats = repeats;
        RerankStats stats;
        for (const auto& [qid, sparse] : run.queries) {
            const auto t0 = clock::now();
            const DenseVector query = encode(qid);
            const auto t1 = clock::now();
            IndexScorer scorer(index, query);
            std::vector<ScoredDoc> scored = cfg.mode == StopMode::exhaustive
                                                ? score_candidates(sparse, scorer, cfg, stats)
                                                : early_stop_candidates(sparse, scorer, cfg, stats);
            const auto t2 = clock::now();
            QueryRanking ranking = to_ranking(
                sparse, cfg.mode == StopMode::exhaustive ? select_top_k(std::move(scored), cfg.k) : std::move(scored));
            const auto t3 = clock::now();
            current.encode_ms += ms(t1 - t0);
            current.score_ms += ms(t2 - t1);
            current.sort_ms += ms(t3 - t2);
            ++current.queries;
            if (ranking.size() > cfg.k) {
                throw Error("internal: ranking longer than k");
            }
        }
        current.lookups = stats.lookups;
        current.early_stops = stats.early_stops;
        const double total = current.total_ms();
        if (total < best_total) {
            best_total = total;
            best = current;
        }
    }
    if (best.queries > 0) {
        const auto n = static_cast<double>(best.queries);
        best.encode_ms /= n;
        best.score_ms /= n;
        best.sort_ms /= n;
    }
    return best;
}

inline std::string format_latency_table(const LatencyReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "stage              ms/query\n"
                  "encode           %10.4f\n"
                  "lookup+interp    %10.4f\n"
                  "sort             %10.4f\n"
                  "total            %10.4f\n"
                  "lookups/query    %10.2f\n"
                  "early stops      %10zu\n"
                  "queries          %10zu\n"
                  "repeats          %10zu\n",
                  r.encode_ms, r.score_ms, r.sort_ms, r.total_ms(), r.lookups_per_query(), r.early_stops, r.queries,
                  r.repeats);
    return buf;
}

inline std::string format_latency_records(const LatencyReport& r) {
    std::string out;
    auto add = [&](const char* name, const std::string& value) { out += std::string(name) + '\t' + value + '\n'; };
    add("encode_ms", detail::format_double(r.encode_ms));
    add("lookup_interpolate_ms", detail::format_double(r.score_ms));
    add("sort_ms", detail::format_double(r.sort_ms));
    add("lookups", std::to_string(r.lookups));
    add("early_stops", std::to_string(r.early_stops));
    add("queries", std::to_string(r.queries));
    return out;
}

} // namespace fastforward
