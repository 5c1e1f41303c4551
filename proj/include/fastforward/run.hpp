#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "fastforward/detail/text.hpp"
#include "fastforward/error.hpp"

namespace fastforward {

struct RunEntry {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

/// Ranked documents of one query, best first. Position i has rank i + 1.
using QueryRanking = std::vector<RunEntry>;

/// Per-query rankings, keyed by query ID.
struct RankedRun {
    std::string tag;
    std::map<std::string, QueryRanking, std::less<>> queries;

    friend bool operator==(const RankedRun&, const RankedRun&) = default;
};

/// Graded relevance judgments; unjudged pairs are absent and count as 0.
using Qrels = std::map<std::string, std::map<std::string, int, std::less<>>, std::less<>>;

/// Parses `query_id Q0 doc_id rank score tag`. Entries of a query are ordered by score
/// descending, ties by the rank column. The tag of the first line becomes the run tag.
inline RankedRun parse_run(std::string_view text) {
    struct Row {
        std::string doc;
        long long rank;
        double score;
    };
    std::map<std::string, std::vector<Row>, std::less<>> rows;
    std::map<std::string, std::unordered_set<std::string>, std::less<>> seen;
    RankedRun run;
    bool have_tag = false;
    detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        auto f = detail::split_ws(line);
        if (f.empty()) {
            return;
        }
        if (f.size() != 6) {
            throw FormatError("expected 'query_id Q0 doc_id rank score tag'", line_no);
        }
        const auto rank = detail::parse_number<long long>(f[3], line_no, "rank");
        const auto score = detail::parse_number<double>(f[4], line_no, "score");
        if (!std::isfinite(score)) {
            throw FormatError("non-finite score", line_no);
        }
        std::string qid(f[0]);
        std::string doc(f[2]);
        if (!seen[qid].insert(doc).second) {
            throw FormatError("duplicate document " + doc + " for query " + qid, line_no);
        }
        if (!have_tag) {
            run.tag = std::string(f[5]);
            have_tag = true;
        }
        rows[qid].push_back({std::move(doc), rank, score});
    });
    for (auto& [qid, list] : rows) {
        std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) {
            if (a.score != b.score) {
                return a.score > b.score;
            }
            return a.rank < b.rank;
        });
        auto& out = run.queries[qid];
        out.reserve(list.size());
        for (auto& r : list) {
            out.push_back({std::move(r.doc), r.score});
        }
    }
    return run;
}

inline RankedRun load_run(const std::filesystem::path& path) { return parse_run(detail::read_file(path)); }

inline std::string format_run(const RankedRun& run) {
    const std::string tag = run.tag.empty() ? "run" : run.tag;
    std::string out;
    for (const auto& [qid, ranking] : run.queries) {
        for (std::size_t i = 0; i < ranking.size(); ++i) {
            out += qid;
            out += " Q0 ";
            out += ranking[i].doc_id;
            out += ' ';
            out += std::to_string(i + 1);
            out += ' ';
            out += detail::format_double(ranking[i].score);
            out += ' ';
            out += tag;
            out += '\n';
        }
    }
    return out;
}

inline void save_run(const RankedRun& run, const std::filesystem::path& path) {
    detail::write_file_atomic(path, format_run(run));
}

/// Parses `query_id 0 doc_id relevance`.
inline Qrels parse_qrels(std::string_view text) {
    Qrels qrels;
    detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        auto f = detail::split_ws(line);
        if (f.empty()) {
            return;
        }
        if (f.size() != 4) {
            throw FormatError("expected 'query_id 0 doc_id relevance'", line_no);
        }
        const int rel = detail::parse_number<int>(f[3], line_no, "relevance");
        if (rel < 0) {
            // Negative grades are sometimes used to mark junk documents; treat them as 0.
            return;
        }
        qrels[std::string(f[0])][std::string(f[2])] = rel;
    });
    return qrels;
}

inline Qrels load_qrels(const std::filesystem::path& path) { return parse_qrels(detail::read_file(path)); }

} // namespace fastforward
