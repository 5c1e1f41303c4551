#pragma once

// Command-line front end. `run_cli` is kept separate from main() so tests can drive it
// in-process with captured output streams.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "fastforward/fastforward.hpp"
#include "fastforward/synthetic.hpp"

namespace fastforward::cli {

namespace fs = std::filesystem;

inline std::shared_ptr<spdlog::logger> logger() {
    static auto log = [] {
        auto l = spdlog::stderr_logger_mt("ffwd");
        l->set_pattern("[%l] %v");
        const char* env = std::getenv("FF_LOG");
        l->set_level(env != nullptr ? spdlog::level::from_str(env) : spdlog::level::warn);
        return l;
    }();
    return log;
}

// ---------------------------------------------------------------------------------------------
// Shared option groups

struct QuerySource {
    std::string vectors;
    std::string texts;
    std::string embeddings;
    std::string projection;
    std::string unknown = "skip";
    std::string unk_token = "[UNK]";
    bool include_special = false;

    void add_to(CLI::App& cmd) {
        auto* v = cmd.add_option("--query-vectors", vectors, "Pre-computed query vectors (qid<TAB>floats)");
        auto* t = cmd.add_option("--queries", texts, "Query texts (qid<TAB>text)");
        auto* e = cmd.add_option("--embeddings", embeddings, "Token embedding table for --queries");
        cmd.add_option("--projection", projection, "Optional linear projection applied to encoded queries")
            ->needs(t);
        cmd.add_option("--unknown", unknown, "Unknown query tokens: skip, error or substitute")
            ->check(CLI::IsMember({"skip", "error", "substitute"}));
        cmd.add_option("--unk-token", unk_token, "Replacement token for --unknown substitute");
        cmd.add_flag("--include-special", include_special, "Average [CLS] and [SEP] into each query");
        v->excludes(t);
        t->needs(e);
        e->needs(t);
    }

    [[nodiscard]] EncoderOptions encoder_options() const {
        EncoderOptions opts;
        if (unknown == "error") {
            opts.unknown = UnknownTokenPolicy::error();
        } else if (unknown == "substitute") {
            opts.unknown = UnknownTokenPolicy::substitute(unk_token);
        }
        opts.include_special = include_special;
        return opts;
    }

    void require() const {
        if (vectors.empty() && texts.empty()) {
            throw CLI::RequiredError("--query-vectors or --queries");
        }
    }
};

/// Query vectors for every query of `run`.
inline QueryVectors resolve_queries(const QuerySource& src, const RankedRun& run) {
    if (!src.vectors.empty()) {
        auto all = load_precomputed_queries(src.vectors);
        logger()->info("loaded {} query vectors", all.size());
        return all;
    }
    const auto table = load_embedding_table(src.embeddings);
    const auto texts = parse_query_texts(detail::read_file(src.texts));
    std::optional<Projection> projection;
    if (!src.projection.empty()) {
        projection = parse_projection(detail::read_file(src.projection));
    }
    const auto opts = src.encoder_options();
    QueryVectors out;
    for (const auto& [qid, _] : run.queries) {
        auto it = texts.find(qid);
        if (it == texts.end()) {
            throw MissingQueryError(qid);
        }
        try {
            out.emplace(qid, finalize_query(encode_query(it->second, table, opts), projection));
        } catch (const EmptyQueryError&) {
            throw Error("query " + qid + ": no token of the query has an embedding");
        }
    }
    logger()->info("encoded {} queries", out.size());
    return out;
}

struct RerankOptions {
    double alpha = 0.5;
    std::size_t k = 1000;
    std::size_t k_s = 1000;
    std::string mode = "exhaustive";
    std::optional<double> dense_bound;
    std::string missing = "abort";

    void add_to(CLI::App& cmd) {
        cmd.add_option("--alpha", alpha, "Sparse weight in [0, 1]")->capture_default_str();
        cmd.add_option("--k", k, "Cut-off depth")->capture_default_str();
        cmd.add_option("--k-s", k_s, "Number of sparse candidates considered")->capture_default_str();
        cmd.add_option("--mode", mode, "exhaustive, early-stop or early-stop-bound")
            ->check(CLI::IsMember({"exhaustive", "early-stop", "early-stop-bound"}))
            ->capture_default_str();
        cmd.add_option("--dense-bound", dense_bound, "Dense score upper bound for early-stop-bound");
        cmd.add_option("--missing", missing, "Candidates absent from the index: abort or skip")
            ->check(CLI::IsMember({"abort", "skip"}))
            ->capture_default_str();
    }

    [[nodiscard]] InterpolationConfig config() const {
        InterpolationConfig cfg;
        cfg.alpha = alpha;
        cfg.k = k;
        cfg.k_s = k_s;
        cfg.missing = missing == "skip" ? MissingPolicy::skip : MissingPolicy::abort;
        if (mode == "early-stop") {
            cfg.mode = StopMode::running_max;
        } else if (mode == "early-stop-bound") {
            if (!dense_bound) {
                throw CLI::RequiredError("--dense-bound (required by --mode early-stop-bound)");
            }
            cfg.mode = StopMode::with_bound;
            cfg.dense_bound = *dense_bound;
        }
        cfg.validate();
        return cfg;
    }
};

// ---------------------------------------------------------------------------------------------
// index-build

struct IndexBuildArgs {
    std::string vectors;
    std::string passages;
    std::string embeddings;
    double keep_ratio = 1.0;
    std::size_t batch_size = 1;
    bool normalize = false;
    std::string output;
};

/// Passage texts (`doc_id<TAB>passage_index<TAB>text`), grouped per document in
/// first-appearance order and sorted by passage index.
inline std::vector<std::pair<std::string, std::vector<std::string>>> parse_passage_texts(std::string_view text) {
    std::vector<std::string> order;
    std::map<std::string, std::map<std::uint64_t, std::string>, std::less<>> docs;
    detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (detail::trim(line).empty()) {
            return;
        }
        const auto first = line.find('\t');
        const auto second = first == std::string_view::npos ? first : line.find('\t', first + 1);
        if (second == std::string_view::npos || first == 0) {
            throw FormatError("expected doc_id<TAB>passage_index<TAB>text", line_no);
        }
        std::string doc(line.substr(0, first));
        const auto pidx =
            detail::parse_number<std::uint64_t>(line.substr(first + 1, second - first - 1), line_no, "passage index");
        auto [it, fresh] = docs.try_emplace(doc);
        if (fresh) {
            order.push_back(doc);
        }
        if (!it->second.emplace(pidx, std::string(line.substr(second + 1))).second) {
            throw FormatError("duplicate passage " + std::to_string(pidx) + " of document " + doc, line_no);
        }
    });
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    for (const auto& id : order) {
        std::vector<std::string> texts;
        for (auto& [_, t] : docs.at(id)) {
            texts.push_back(t);
        }
        out.emplace_back(id, std::move(texts));
    }
    return out;
}

/// Embedding-average passage encoder with selective token retention. Passages are filtered in
/// batches of `batch_size` in file order; the retained length depends on the longest passage
/// of each batch.
inline std::vector<ForwardIndex::Document> encode_passages(std::string_view passage_text, const EmbeddingTable& table,
                                                           double keep_ratio, std::size_t batch_size) {
    auto docs = parse_passage_texts(passage_text);
    std::vector<std::vector<std::string>> tokens;
    std::vector<std::pair<std::size_t, std::size_t>> owner;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (std::size_t p = 0; p < docs[d].second.size(); ++p) {
            tokens.push_back(tokenize(docs[d].second[p], table));
            owner.emplace_back(d, p);
        }
    }
    const IdfScorer idf(tokens);
    std::vector<ForwardIndex::Document> out(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        out[d].id = docs[d].first;
        out[d].passages.resize(docs[d].second.size());
    }
    for (std::size_t start = 0; start < tokens.size(); start += batch_size) {
        const auto end = std::min(tokens.size(), start + batch_size);
        std::vector<std::vector<std::string>> rows(tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                                   tokens.begin() + static_cast<std::ptrdiff_t>(end));
        const auto kept = select_tokens(TokenBatch::from_rows(std::move(rows)), std::cref(idf), keep_ratio);
        for (std::size_t i = start; i < end; ++i) {
            const auto [d, p] = owner[i];
            const auto real = kept.real_tokens(i - start);
            try {
                out[d].passages[p] = encode_embedding_average(real, table);
            } catch (const EmptyQueryError&) {
                throw Error("passage " + std::to_string(p) + " of document " + docs[d].first +
                            " has no token with an embedding");
            }
        }
    }
    return out;
}

inline int cmd_index_build(const IndexBuildArgs& a, std::ostream& out) {
    std::vector<ForwardIndex::Document> docs;
    if (!a.vectors.empty()) {
        docs = parse_passage_vectors(detail::read_file(a.vectors));
    } else {
        const auto table = load_embedding_table(a.embeddings);
        docs = encode_passages(detail::read_file(a.passages), table, a.keep_ratio, a.batch_size);
    }
    if (docs.empty()) {
        throw FormatError("no passages in input", 0);
    }
    if (a.normalize) {
        for (auto& d : docs) {
            for (auto& v : d.passages) {
                v = l2_normalize(v);
            }
        }
    }
    ForwardIndex index(docs.front().passages.front().dim(), a.normalize);
    index.add_documents(docs);
    save_index(index, a.output);
    out << "documents\t" << index.size() << "\nvectors\t" << index.vector_count() << "\ndim\t" << index.dim() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------------------------
// coalesce / inspect

inline std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * fraction);
    return buf;
}

inline int cmd_coalesce(const std::string& index_path, double delta, const std::string& output, std::ostream& out) {
    const auto index = load_index(index_path);
    const auto [coalesced, report] = coalesce(index, delta);
    save_index(coalesced, output);
    out << "documents\t" << report.docs_processed << "\nvectors_before\t" << report.vectors_before
        << "\nvectors_after\t" << report.vectors_after << "\nreduction\t" << percent(report.reduction()) << '\n';
    return 0;
}

inline int cmd_inspect(const std::string& index_path, const std::string& doc, std::ostream& out) {
    const auto index = load_index(index_path);
    if (!doc.empty()) {
        const auto pv = index.passages(doc);
        for (std::size_t p = 0; p < pv.size(); ++p) {
            out << doc << '\t' << p << '\t';
            for (std::size_t j = 0; j < index.dim(); ++j) {
                out << (j == 0 ? "" : " ") << detail::format_float(pv[p][j]);
            }
            out << '\n';
        }
        return 0;
    }
    out << "dim\t" << index.dim() << "\nnormalized\t" << (index.normalized() ? "yes" : "no") << "\ndocuments\t"
        << index.size() << "\nvectors\t" << index.vector_count() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------------------------
// rerank / hybrid

inline void print_stats(const RerankStats& s, std::ostream& out) {
    out << "queries\t" << s.queries << "\nlookups\t" << s.lookups << "\nearly_stops\t" << s.early_stops
        << "\nmissing\t" << s.missing << '\n';
}

inline int cmd_rerank(const std::string& run_path, const std::string& index_path, const QuerySource& src,
                      const RerankOptions& ro, std::size_t threads, const std::string& tag, const std::string& output,
                      std::ostream& out) {
    const auto cfg = ro.config();
    const auto sparse = load_run(run_path);
    const auto index = load_index(index_path);
    logger()->info("index: {} documents, {} vectors, dim {}", index.size(), index.vector_count(), index.dim());
    const auto queries = resolve_queries(src, sparse);
    const auto result = rerank_run(sparse, index, queries, cfg, threads, tag);
    save_run(result.run, output);
    print_stats(result.stats, out);
    return 0;
}

inline int cmd_hybrid(const std::string& sparse_path, const std::string& dense_path, double alpha,
                      const std::string& tag, const std::string& output, std::ostream& out) {
    const auto result = hybrid_score(load_run(sparse_path), load_run(dense_path), alpha, tag);
    save_run(result.run, output);
    out << "queries\t" << result.run.queries.size() << "\nfallback_queries\t" << result.fallback_queries << '\n';
    return 0;
}

// ---------------------------------------------------------------------------------------------
// evaluate / bench

inline int cmd_evaluate(const std::string& run_path, const std::string& qrels_path, int min_rel,
                        const std::string& records, std::size_t threads, std::ostream& out) {
    const auto report = evaluate(load_run(run_path), load_qrels(qrels_path), default_metrics(), min_rel, threads);
    if (report.query_count == 0) {
        logger()->warn("no query appears in both the run and the qrels");
    }
    if (!records.empty()) {
        detail::write_file_atomic(records, format_metric_records(report));
    }
    out << format_metric_table(report);
    return 0;
}

inline int cmd_bench(const std::string& run_path, const std::string& index_path, const QuerySource& src,
                     const RerankOptions& ro, std::size_t repeats, const std::string& records, std::ostream& out) {
    const auto cfg = ro.config();
    const auto sparse = load_run(run_path);
    const auto index = load_index(index_path);
    LatencyReport report;
    if (!src.vectors.empty()) {
        const auto queries = resolve_queries(src, sparse);
        report = benchmark_rerank(
            index, sparse,
            [&](const std::string& qid) {
                auto it = queries.find(qid);
                if (it == queries.end()) {
                    throw MissingQueryError(qid);
                }
                return it->second;
            },
            cfg, repeats);
    } else {
        // Tokenize up front; only embedding lookup, averaging and projection are timed.
        const auto table = load_embedding_table(src.embeddings);
        const auto texts = parse_query_texts(detail::read_file(src.texts));
        std::optional<Projection> projection;
        if (!src.projection.empty()) {
            projection = parse_projection(detail::read_file(src.projection));
        }
        std::map<std::string, std::vector<std::string>, std::less<>> tokens;
        for (const auto& [qid, _] : sparse.queries) {
            auto it = texts.find(qid);
            if (it == texts.end()) {
                throw MissingQueryError(qid);
            }
            tokens.emplace(qid, tokenize(it->second, table));
        }
        const auto opts = src.encoder_options();
        report = benchmark_rerank(
            index, sparse,
            [&](const std::string& qid) {
                return finalize_query(encode_embedding_average(tokens.at(qid), table, opts), projection);
            },
            cfg, repeats);
    }
    if (!records.empty()) {
        detail::write_file_atomic(records, format_latency_records(report));
    }
    out << format_latency_table(report);
    return 0;
}

// ---------------------------------------------------------------------------------------------
// selftest

inline int cmd_selftest(std::uint64_t seed, std::ostream& out) {
    synthetic::Rng rng(seed);
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        out << (ok ? "PASS " : "FAIL ") << name << '\n';
        failures += ok ? 0 : 1;
    };

    {
        bool ok = true;
        for (int t = 0; t < 200 && ok; ++t) {
            const std::size_t n = 50 + rng() % 500;
            auto inst = synthetic::random_instance(rng, n);
            const auto sparse = synthetic::to_ranking(inst);
            std::map<std::string, double, std::less<>> dense;
            double bound = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                dense.emplace(sparse[i].doc_id, inst.dense[i]);
                bound = std::max(bound, inst.dense[i]);
            }
            auto scorer = [&](std::string_view id) -> std::optional<double> { return dense.find(id)->second; };
            InterpolationConfig cfg;
            cfg.alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            cfg.k_s = n;
            cfg.k = 1 + rng() % n;
            RerankStats stats;
            const auto exact = rerank_query(sparse, scorer, cfg, stats);
            cfg.mode = StopMode::with_bound;
            cfg.dense_bound = bound;
            const auto early = rerank_query(sparse, scorer, cfg, stats);
            ok = exact.size() == early.size();
            for (std::size_t i = 0; ok && i < exact.size(); ++i) {
                ok = exact[i].score == early[i].score;
            }
        }
        check("early stopping with a true bound returns the exhaustive top-k", ok);
    }
    {
        const auto index = synthetic::clustered_index(rng, 200, 16, 6);
        const auto [same, r0] = coalesce(index, 0.0);
        const auto [one, r2] = coalesce(index, 2.1);
        check("coalescing at delta 0 keeps every vector", r0.vectors_after == index.vector_count());
        check("coalescing at delta 2.1 keeps one vector per document", r2.vectors_after == index.size());
        check("FFIDX round trip", deserialize_index(serialize_index(index)) == index);
    }
    {
        const auto index = synthetic::random_index(rng, 100, 8, 3);
        RankedRun run;
        run.tag = "selftest";
        for (int q = 0; q < 5; ++q) {
            run.queries["q" + std::to_string(q)] = synthetic::random_sparse_ranking(rng, index, 50);
        }
        check("TREC run round trip", parse_run(format_run(run)) == run);
        Qrels qrels;
        for (const auto& [qid, r] : run.queries) {
            qrels[qid][r.front().doc_id] = 1;
        }
        const auto report = evaluate(run, qrels, default_metrics());
        check("ideal rankings score nDCG 1", report.at("nDCG@10").mean == 1.0);
    }
    out << (failures == 0 ? "selftest passed\n" : "selftest failed\n");
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------------------------

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fast-Forward index re-ranking", "ffwd"};
    app.require_subcommand(1);
    std::size_t threads = 1;
    std::string output;

    IndexBuildArgs build;
    auto* c_build = app.add_subcommand("index-build", "Build an FFIDX forward index");
    auto* b_vectors = c_build->add_option("--vectors", build.vectors, "Passage vectors (doc<TAB>pidx<TAB>floats)");
    auto* b_passages = c_build->add_option("--passages", build.passages, "Passage texts (doc<TAB>pidx<TAB>text)");
    auto* b_embed = c_build->add_option("--embeddings", build.embeddings, "Token embedding table for --passages");
    c_build->add_option("--keep-ratio", build.keep_ratio, "Fraction of tokens retained per passage")
        ->check(CLI::Range(0.0, 1.0))
        ->needs(b_passages);
    c_build->add_option("--batch-size", build.batch_size, "Passages filtered together")
        ->check(CLI::PositiveNumber)
        ->needs(b_passages);
    c_build->add_flag("--normalize", build.normalize, "L2-normalize every passage vector");
    c_build->add_option("--output", build.output, "Output FFIDX file")->required();
    b_vectors->excludes(b_passages);
    b_passages->needs(b_embed);
    b_embed->needs(b_passages);

    std::string index_path;
    double delta = 0.0;
    auto* c_coalesce = app.add_subcommand("coalesce", "Sequentially coalesce passage vectors");
    c_coalesce->add_option("--index", index_path, "Input FFIDX file")->required();
    c_coalesce->add_option("--delta", delta, "Cosine distance threshold")->required();
    c_coalesce->add_option("--output", output, "Output FFIDX file")->required();

    std::string doc;
    auto* c_inspect = app.add_subcommand("inspect", "Summarize an FFIDX file");
    c_inspect->add_option("--index", index_path, "FFIDX file")->required();
    c_inspect->add_option("--doc", doc, "Print the passage vectors of one document");

    std::string run_path;
    std::string tag;
    QuerySource qsrc;
    RerankOptions ropts;
    auto* c_rerank = app.add_subcommand("rerank", "Interpolate a sparse run with forward-index scores");
    c_rerank->add_option("--run", run_path, "Sparse TREC run")->required();
    c_rerank->add_option("--index", index_path, "FFIDX file")->required();
    qsrc.add_to(*c_rerank);
    ropts.add_to(*c_rerank);
    c_rerank->add_option("--threads", threads, "Worker threads")->capture_default_str();
    c_rerank->add_option("--tag", tag, "Run tag")->default_str("fast-forward");
    c_rerank->add_option("--output", output, "Output TREC run")->required();

    std::string sparse_path;
    std::string dense_path;
    double hybrid_alpha = 0.5;
    auto* c_hybrid = app.add_subcommand("hybrid", "Merge a sparse and a dense run");
    c_hybrid->add_option("--sparse-run", sparse_path, "Sparse TREC run")->required();
    c_hybrid->add_option("--dense-run", dense_path, "Dense TREC run")->required();
    c_hybrid->add_option("--alpha", hybrid_alpha, "Sparse weight in [0, 1]")->capture_default_str();
    c_hybrid->add_option("--tag", tag, "Run tag")->default_str("hybrid");
    c_hybrid->add_option("--output", output, "Output TREC run")->required();

    std::string qrels_path;
    std::string records;
    int min_rel = 1;
    auto* c_eval = app.add_subcommand("evaluate", "Compute nDCG@10, AP@1000, RR@10 and R@1000");
    c_eval->add_option("--run", run_path, "TREC run")->required();
    c_eval->add_option("--qrels", qrels_path, "Relevance judgments")->required();
    c_eval->add_option("--min-rel", min_rel, "Lowest grade counted as relevant")->capture_default_str();
    c_eval->add_option("--records", records, "Also write metric<TAB>qid<TAB>value records");
    c_eval->add_option("--threads", threads, "Worker threads")->capture_default_str();

    std::size_t repeats = 5;
    auto* c_bench = app.add_subcommand("bench", "Time re-ranking per stage");
    c_bench->add_option("--run", run_path, "Sparse TREC run")->required();
    c_bench->add_option("--index", index_path, "FFIDX file")->required();
    qsrc.add_to(*c_bench);
    ropts.add_to(*c_bench);
    c_bench->add_option("--repeats", repeats, "Repetitions; the fastest is reported")->capture_default_str();
    c_bench->add_option("--records", records, "Also write stage<TAB>value records");

    std::uint64_t seed = 42;
    auto* c_self = app.add_subcommand("selftest", "Run built-in checks on synthetic data");
    c_self->add_option("--seed", seed, "Random seed")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (c_build->parsed()) {
            if (build.vectors.empty() && build.passages.empty()) {
                throw CLI::RequiredError("--vectors or --passages");
            }
            return cmd_index_build(build, out);
        }
        if (c_coalesce->parsed()) {
            return cmd_coalesce(index_path, delta, output, out);
        }
        if (c_inspect->parsed()) {
            return cmd_inspect(index_path, doc, out);
        }
        if (c_rerank->parsed()) {
            qsrc.require();
            return cmd_rerank(run_path, index_path, qsrc, ropts, threads, tag.empty() ? "fast-forward" : tag, output,
                              out);
        }
        if (c_hybrid->parsed()) {
            return cmd_hybrid(sparse_path, dense_path, hybrid_alpha, tag.empty() ? "hybrid" : tag, output, out);
        }
        if (c_eval->parsed()) {
            return cmd_evaluate(run_path, qrels_path, min_rel, records, threads, out);
        }
        if (c_bench->parsed()) {
            qsrc.require();
            return cmd_bench(run_path, index_path, qsrc, ropts, repeats, records, out);
        }
        if (c_self->parsed()) {
            return cmd_selftest(seed, out);
        }
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace fastforward::cli
