#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fastforward/detail/text.hpp"
#include "fastforward/error.hpp"
#include "fastforward/parallel.hpp"
#include "fastforward/run.hpp"

namespace fastforward {

using Judgments = std::map<std::string, int, std::less<>>;

namespace detail {

inline int grade(const Judgments& judged, const std::string& doc) {
    auto it = judged.find(doc);
    return it == judged.end() ? 0 : it->second;
}

inline std::size_t relevant_count(const Judgments& judged, int min_rel) {
    return static_cast<std::size_t>(
        std::count_if(judged.begin(), judged.end(), [&](const auto& j) { return j.second >= min_rel; }));
}

inline void check_depth(std::size_t k) {
    if (k == 0) {
        throw DomainError("metric depth k must be >= 1");
    }
}

} // namespace detail

/// nDCG@k with gain 2^rel - 1 and discount log2(rank + 1). Zero when nothing is relevant.
inline double ndcg_at_k(const QueryRanking& ranking, const Judgments& judged, std::size_t k) {
    detail::check_depth(k);
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
        const int rel = detail::grade(judged, ranking[i].doc_id);
        if (rel > 0) {
            dcg += (std::exp2(rel) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
        }
    }
    std::vector<int> ideal;
    for (const auto& [_, rel] : judged) {
        if (rel > 0) {
            ideal.push_back(rel);
        }
    }
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
        idcg += (std::exp2(ideal[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return idcg == 0.0 ? 0.0 : dcg / idcg;
}

/// Average precision over the top k, normalized by the number of judged-relevant documents.
inline double ap_at_k(const QueryRanking& ranking, const Judgments& judged, std::size_t k, int min_rel = 1) {
    detail::check_depth(k);
    const auto total = detail::relevant_count(judged, min_rel);
    if (total == 0) {
        return 0.0;
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
        if (detail::grade(judged, ranking[i].doc_id) >= min_rel) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(total);
}

inline double rr_at_k(const QueryRanking& ranking, const Judgments& judged, std::size_t k, int min_rel = 1) {
    detail::check_depth(k);
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
        if (detail::grade(judged, ranking[i].doc_id) >= min_rel) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

inline double recall_at_k(const QueryRanking& ranking, const Judgments& judged, std::size_t k, int min_rel = 1) {
    detail::check_depth(k);
    const auto total = detail::relevant_count(judged, min_rel);
    if (total == 0) {
        return 0.0;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
        if (detail::grade(judged, ranking[i].doc_id) >= min_rel) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

struct MetricSpec {
    enum class Kind { ndcg, ap, rr, recall };

    Kind kind;
    std::size_t k;

    [[nodiscard]] std::string name() const {
        switch (kind) {
        case Kind::ndcg:
            return "nDCG@" + std::to_string(k);
        case Kind::ap:
            return "AP@" + std::to_string(k);
        case Kind::rr:
            return "RR@" + std::to_string(k);
        case Kind::recall:
            return "R@" + std::to_string(k);
        }
        return {};
    }

    [[nodiscard]] double compute(const QueryRanking& ranking, const Judgments& judged, int min_rel) const {
        switch (kind) {
        case Kind::ndcg:
            return ndcg_at_k(ranking, judged, k);
        case Kind::ap:
            return ap_at_k(ranking, judged, k, min_rel);
        case Kind::rr:
            return rr_at_k(ranking, judged, k, min_rel);
        case Kind::recall:
            return recall_at_k(ranking, judged, k, min_rel);
        }
        return 0.0;
    }
};

inline std::vector<MetricSpec> default_metrics() {
    return {{MetricSpec::Kind::ndcg, 10}, {MetricSpec::Kind::ap, 1000}, {MetricSpec::Kind::rr, 10},
            {MetricSpec::Kind::recall, 1000}};
}

struct MetricReport {
    struct Metric {
        std::string name;
        std::map<std::string, double, std::less<>> per_query;
        double mean = 0.0;
    };

    std::vector<Metric> metrics;
    std::size_t query_count = 0;

    [[nodiscard]] const Metric& at(std::string_view name) const {
        for (const auto& m : metrics) {
            if (m.name == name) {
                return m;
            }
        }
        throw Error("metric not in report: " + std::string(name));
    }
};

/// Evaluates the queries present in both the run and the qrels.
inline MetricReport evaluate(const RankedRun& run, const Qrels& qrels, const std::vector<MetricSpec>& metrics,
                             int min_rel = 1, std::size_t threads = 1) {
    std::vector<std::pair<const QueryRanking*, const Judgments*>> items;
    std::vector<std::string> qids;
    for (const auto& [qid, ranking] : run.queries) {
        if (auto it = qrels.find(qid); it != qrels.end()) {
            items.emplace_back(&ranking, &it->second);
            qids.push_back(qid);
        }
    }
    std::vector<std::vector<double>> values(items.size(), std::vector<double>(metrics.size()));
    parallel_for(items.size(), threads, [&](std::size_t i) {
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            values[i][m] = metrics[m].compute(*items[i].first, *items[i].second, min_rel);
        }
    });
    MetricReport report;
    report.query_count = items.size();
    for (std::size_t m = 0; m < metrics.size(); ++m) {
        MetricReport::Metric metric{metrics[m].name(), {}, 0.0};
        double sum = 0.0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            metric.per_query.emplace(qids[i], values[i][m]);
            sum += values[i][m];
        }
        metric.mean = items.empty() ? 0.0 : sum / static_cast<double>(items.size());
        report.metrics.push_back(std::move(metric));
    }
    return report;
}

/// One record per line: `metric<TAB>query_id<TAB>value`, with `all` for the mean.
inline std::string format_metric_records(const MetricReport& report) {
    std::string out;
    for (const auto& m : report.metrics) {
        for (const auto& [qid, v] : m.per_query) {
            out += m.name + '\t' + qid + '\t' + detail::format_double(v) + '\n';
        }
        out += m.name + "\tall\t" + detail::format_double(m.mean) + '\n';
    }
    return out;
}

inline std::string format_metric_table(const MetricReport& report) {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-12s %10s\n", "metric", "mean");
    out += buf;
    for (const auto& m : report.metrics) {
        std::snprintf(buf, sizeof(buf), "%-12s %10.4f\n", m.name.c_str(), m.mean);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-12s %10zu\n", "queries", report.query_count);
    out += buf;
    return out;
}

} // namespace fastforward
