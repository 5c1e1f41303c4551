// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any criterion fails.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "fastforward/fastforward.hpp"
#include "fastforward/synthetic.hpp"
#include "oracle/metrics_oracle.hpp"
#include "oracle/rerank_oracle.hpp"

namespace ff = fastforward;
namespace syn = fastforward::synthetic;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool ok;
    std::string detail;
};

int failures = 0;

void criterion(const char* name, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o{false, {}};
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("%s %s (%s; %.2f s)\n", o.ok ? "PASS" : "FAIL", name, o.detail.c_str(), s);
    std::fflush(stdout);
    failures += o.ok ? 0 : 1;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Dense scores of a synthetic instance, addressed by the "d<i>" document names.
struct InstanceScorer {
    const std::vector<double>* dense;
    std::optional<double> operator()(std::string_view id) const {
        std::size_t i = 0;
        std::from_chars(id.data() + 1, id.data() + id.size(), i);
        return (*dense)[i];
    }
};

ff::QueryRanking rerank(const syn::ScoreInstance& inst, const ff::InterpolationConfig& cfg, ff::RerankStats& stats) {
    const auto sparse = syn::to_ranking(inst);
    return ff::rerank_query(sparse, InstanceScorer{&inst.dense}, cfg, stats);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

Outcome early_stop_exactness() {
    const auto t0 = Clock::now();
    syn::Rng rng(1001);
    std::size_t instances = 0;
    std::size_t mismatches = 0;
    for (std::size_t k_s : {100U, 1000U, 5000U}) {
        for (std::size_t k : {1U, 10U, 100U}) {
            for (int t = 0; t < 112; ++t) {
                auto inst = syn::random_instance(rng, k_s);
                ff::InterpolationConfig cfg;
                cfg.alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                cfg.k_s = k_s;
                cfg.k = k;
                cfg.mode = ff::StopMode::with_bound;
                cfg.dense_bound = *std::max_element(inst.dense.begin(), inst.dense.end());
                ff::RerankStats stats;
                const auto early = rerank(inst, cfg, stats);
                const auto exact = oracle::exhaustive(inst.sparse, inst.dense, cfg.alpha, k_s, k);
                std::vector<double> a;
                std::vector<double> b;
                for (const auto& e : early) {
                    a.push_back(e.score);
                }
                for (const auto& e : exact) {
                    b.push_back(e.score);
                }
                std::sort(a.begin(), a.end());
                std::sort(b.begin(), b.end());
                mismatches += a == b ? 0 : 1;
                ++instances;
            }
        }
    }
    const double s = seconds_since(t0);
    return {mismatches == 0 && instances >= 1000 && s < 60.0,
            fmt("%.0f instances, %.0f mismatches", double(instances), double(mismatches))};
}

Outcome lookup_reduction() {
    syn::Rng rng(1002);
    const std::vector<std::size_t> ks{1, 10, 50, 100, 500};
    std::vector<double> mean(ks.size(), 0.0);
    double min_rho = 1.0;
    bool monotone = true;
    const int trials = 40;
    for (int t = 0; t < trials; ++t) {
        const auto inst = syn::correlated_instance(rng, 5000, 0.8);
        min_rho = std::min(min_rho, syn::spearman(inst.sparse, inst.dense));
        std::size_t previous = 0;
        for (std::size_t i = 0; i < ks.size(); ++i) {
            ff::InterpolationConfig cfg;
            cfg.alpha = 0.5;
            cfg.k_s = 5000;
            cfg.k = ks[i];
            cfg.mode = ff::StopMode::running_max;
            ff::RerankStats stats;
            (void)rerank(inst, cfg, stats);
            monotone = monotone && stats.lookups >= previous;
            previous = stats.lookups;
            mean[i] += static_cast<double>(stats.lookups) / trials;
        }
    }
    std::string detail = fmt("min Spearman %.3f; mean lookups", min_rho);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        detail += " k=" + std::to_string(ks[i]) + ":" + fmt("%.1f", mean[i]);
    }
    return {min_rho >= 0.5 && mean[3] < 5000.0 && monotone, detail};
}

Outcome coalescing_extremes() {
    const auto t0 = Clock::now();
    syn::Rng rng(1003);
    const auto index = syn::clustered_index(rng, 1000, 32, 8);
    const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.1};
    std::vector<std::size_t> after;
    for (double d : grid) {
        after.push_back(ff::coalesce(index, d).second.vectors_after);
    }
    const auto full = ff::coalesce(index, 2.1).second;
    const bool monotone = std::is_sorted(after.rbegin(), after.rend());
    const bool zero = after.front() == index.vector_count();
    const bool one_each = after.back() == index.size();
    const bool reduction = std::abs(full.reduction() - (1.0 - double(index.size()) / double(index.vector_count()))) < 1e-15;
    std::string detail = "vectors_after:";
    for (auto a : after) {
        detail += " " + std::to_string(a);
    }
    return {zero && one_each && monotone && reduction && seconds_since(t0) < 30.0, detail};
}

Outcome hand_traces() {
    ff::ForwardIndex index(2);
    index.add_document("d", std::vector<ff::DenseVector>{{1, 0}, {1, 0}, {0, 1}});
    const auto coalesced = ff::coalesce(index, 0.5).first.lookup("d");
    const bool alg1 = coalesced == std::vector<ff::DenseVector>{{1, 0}, {0, 1}};

    const syn::ScoreInstance inst{{0.9, 0.8, 0.1}, {0.5, 0.9, 0.2}};
    ff::InterpolationConfig cfg;
    cfg.alpha = 0.5;
    cfg.k_s = 3;
    cfg.k = 1;
    cfg.mode = ff::StopMode::with_bound;
    cfg.dense_bound = 0.9;
    ff::RerankStats stats;
    const auto top = rerank(inst, cfg, stats);
    const bool alg2 = top.size() == 1 && top[0].doc_id == "d1" && top[0].score == 0.5 * 0.8 + 0.5 * 0.9 &&
                      stats.lookups == 2;
    return {alg1 && alg2, std::string(alg1 ? "coalescing trace ok" : "coalescing trace wrong") +
                              fmt(", early stop top-1 %.17g with %.0f lookups", top.empty() ? 0.0 : top[0].score,
                                  double(stats.lookups))};
}

Outcome metric_agreement() {
    std::mt19937_64 rng(1004);
    std::uniform_int_distribution<int> grade(0, 3);
    std::bernoulli_distribution judged(0.3);
    double worst = 0.0;
    const auto metrics = ff::default_metrics();
    for (int t = 0; t < 100; ++t) {
        const std::size_t pool = 20 + rng() % 1500;
        std::vector<std::string> docs;
        for (std::size_t i = 0; i < pool; ++i) {
            docs.push_back("doc" + std::to_string(i));
        }
        std::shuffle(docs.begin(), docs.end(), rng);
        ff::QueryRanking ranking;
        for (std::size_t i = 0; i < pool * 3 / 4; ++i) {
            ranking.push_back({docs[i], -double(i)});
        }
        ff::Judgments j;
        oracle::Grades oj;
        oracle::DocList names;
        for (const auto& d : docs) {
            if (judged(rng)) {
                j[d] = oj[d] = grade(rng);
            }
        }
        for (const auto& e : ranking) {
            names.push_back(e.doc_id);
        }
        worst = std::max(worst, std::abs(ff::ndcg_at_k(ranking, j, 10) - oracle::ndcg(names, oj, 10)));
        worst = std::max(worst, std::abs(ff::ap_at_k(ranking, j, 1000) - oracle::ap(names, oj, 1000, 1)));
        worst = std::max(worst, std::abs(ff::rr_at_k(ranking, j, 10) - oracle::rr(names, oj, 10, 1)));
        worst = std::max(worst, std::abs(ff::recall_at_k(ranking, j, 1000) - oracle::recall(names, oj, 1000, 1)));
    }

    // Toy bundle: the committed golden re-ranking judged against the toy qrels, worked by hand.
    const std::filesystem::path toy = FF_TOY_DIR;
    const auto report = ff::evaluate(ff::load_run(toy / "rerank.golden"), ff::load_qrels(toy / "qrels.txt"), metrics);
    const double l3 = std::log2(3.0);
    const double ndcg = ((3.0 / l3) / (3.5 + 1.0 / l3) + 0.5 + (1.0 / l3) / (1.0 + 1.0 / l3)) / 3.0;
    const double toy_err = std::max({std::abs(report.at("nDCG@10").mean - ndcg),
                                     std::abs(report.at("AP@1000").mean - 0.25),
                                     std::abs(report.at("RR@10").mean - 4.0 / 9.0),
                                     std::abs(report.at("R@1000").mean - 11.0 / 18.0)});
    return {worst <= 1e-9 && toy_err <= 1e-6 && report.query_count == 3,
            fmt("max oracle deviation %.3g, max toy deviation %.3g", worst, toy_err)};
}

Outcome dkw() {
    std::mt19937_64 rng(1005);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool ok = true;
    std::string detail;
    for (std::size_t n : {10U, 100U}) {
        for (double eps : {0.05, 0.1}) {
            const int trials = 10000;
            int below = 0;
            for (int t = 0; t < trials; ++t) {
                double z = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    z = std::max(z, u(rng));
                }
                below += z < 1.0 - eps ? 1 : 0;
            }
            const double freq = double(below) / trials;
            const double bound = ff::dkw_bound(n, eps);
            ok = ok && freq <= std::exp(-2.0 * double(n) * eps * eps) + 0.01 && bound == std::exp(-2.0 * double(n) * eps * eps);
            detail += fmt("n=%.0f eps=%.2f freq %.4f", double(n), eps, freq) + fmt(" <= %.4f; ", bound);
        }
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

Outcome interpolation_identities() {
    syn::Rng rng(1006);
    int bad = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 10 + rng() % 300;
        auto inst = syn::random_instance(rng, n);
        if (t % 4 == 0) {
            // force ties in both score lists
            for (auto& x : inst.sparse) {
                x = std::round(x / 5.0);
            }
            for (auto& x : inst.dense) {
                x = std::round(x);
            }
            syn::sort_by_sparse(inst);
        }
        for (double alpha : {0.0, 1.0}) {
            ff::InterpolationConfig cfg;
            cfg.alpha = alpha;
            cfg.k_s = n;
            cfg.k = n;
            ff::RerankStats stats;
            const auto out = rerank(inst, cfg, stats);
            const auto expected = oracle::order_by(alpha == 0.0 ? inst.dense : inst.sparse, n);
            for (std::size_t i = 0; i < n; ++i) {
                bad += out[i].doc_id == syn::doc_name(expected[i]) ? 0 : 1;
            }
        }
    }
    return {bad == 0, fmt("%.0f misplaced documents over 100 instances", double(bad))};
}

Outcome format_round_trips() {
    syn::Rng rng(1007);
    int bad = 0;
    const auto path = std::filesystem::temp_directory_path() / "ff_acceptance.ffidx";
    for (int t = 0; t < 20; ++t) {
        const auto index = syn::random_index(rng, 200, 1 + rng() % 64, 5);
        ff::save_index(index, path);
        const auto loaded = ff::load_index(path);
        bad += loaded == index && ff::serialize_index(loaded) == ff::detail::read_file(path) ? 0 : 1;
    }
    std::filesystem::remove(path);
    for (int t = 0; t < 100; ++t) {
        const auto index = syn::random_index(rng, 50, 4, 1);
        ff::RankedRun run;
        run.tag = "rt";
        for (int q = 0; q < 4; ++q) {
            run.queries["q" + std::to_string(q)] = syn::random_sparse_ranking(rng, index, 1 + rng() % 50);
        }
        bad += ff::parse_run(ff::format_run(run)) == run ? 0 : 1;
    }
    const std::vector<std::string> bad_tables{"",
                                              "a\t1 2\n",
                                              "#dim 2\n",
                                              "#dim x\na\t1 2\n",
                                              "#dim 2\na\t1 2 3\n",
                                              "#dim 2\na\t1 2\na\t3 4\n",
                                              "#dim 2\na 1 2\n",
                                              "#dim 2\na\t1 nan\n"};
    for (const auto& text : bad_tables) {
        try {
            (void)ff::parse_embedding_table(text);
            ++bad;
        } catch (const ff::FormatError&) {
        }
    }
    const std::vector<std::string> bad_queries{"q\t1 2\nr\t1 2 3\n", "q\t1 2\nq\t1 2\n", "q 1 2\n", "q\t\n",
                                               "q\t1 inf\n"};
    for (const auto& text : bad_queries) {
        try {
            (void)ff::parse_query_vectors(text);
            ++bad;
        } catch (const ff::FormatError&) {
        }
    }
    return {bad == 0, fmt("20 FFIDX files, 100 runs, %.0f malformed inputs; %.0f failures",
                          double(bad_tables.size() + bad_queries.size()), double(bad))};
}

Outcome latency() {
    syn::Rng rng(1008);
    const auto index = syn::random_index(rng, 5000, 768, 4);
    ff::RankedRun run;
    run.queries["q"] = syn::random_sparse_ranking(rng, index, 5000);
    const ff::DenseVector query(syn::gaussian_vector(rng, 768));
    ff::InterpolationConfig cfg;
    cfg.k_s = 5000;
    cfg.k = 1000;
    const auto report = ff::benchmark_rerank(index, run, [&](const std::string&) { return query; }, cfg, 3);
    return {report.total_ms() < 1000.0 && report.lookups == 5000,
            fmt("encode %.3f ms, lookup+interpolate %.3f ms, sort %.3f ms", report.encode_ms, report.score_ms,
                report.sort_ms)};
}

Outcome selective_filter() {
    std::mt19937_64 rng(1009);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::unordered_map<std::string, double> scores;
    for (int i = 0; i < 50; ++i) {
        scores["t" + std::to_string(i)] = unit(rng);
    }
    const ff::TokenScorer scorer = [&](std::string_view t) { return scores.at(std::string(t)); };
    int bad = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<std::vector<std::string>> rows(1 + rng() % 8);
        for (auto& r : rows) {
            r.resize(rng() % 40);
            for (auto& tok : r) {
                tok = "t" + std::to_string(rng() % 50);
            }
        }
        auto batch = ff::TokenBatch::from_rows(rows);
        // extra trailing padding so that padding-first removal is exercised on every row
        const std::size_t extra = rng() % 10;
        for (auto& r : batch.rows) {
            r.resize(r.size() + extra, batch.pad_token);
        }
        batch.max_len += extra;
        const double p = t % 10 == 0 ? std::round(unit(rng) * 4) / 4 : unit(rng);
        const auto out = ff::select_tokens(batch, scorer, p);
        const auto target = static_cast<std::size_t>(std::ceil(p * double(batch.max_len) - 1e-9));
        std::size_t longest = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto kept = out.real_tokens(i);
            longest = std::max(longest, kept.size());
            // padding goes first: a row whose real tokens fit loses none of them
            bad += kept.size() == std::min(target, rows[i].size()) ? 0 : 1;
            bad += rows[i].size() <= target && kept != rows[i] ? 1 : 0;
            std::size_t j = 0;
            for (const auto& tok : rows[i]) {
                j += j < kept.size() && kept[j] == tok ? 1 : 0;
            }
            bad += j == kept.size() ? 0 : 1;
        }
        bad += out.max_len == longest && out.max_len <= target ? 0 : 1;
    }
    return {bad == 0, fmt("1000 batches, %.0f violations", double(bad))};
}

} // namespace

int main() {
    criterion("early stopping with a true dense bound returns the exact top-k scores", early_stop_exactness);
    criterion("early stopping saves lookups on correlated scores and lookups grow with k", lookup_reduction);
    criterion("coalescing extremes and monotonicity over a delta grid", coalescing_extremes);
    criterion("hand-traced coalescing and early-stopping goldens", hand_traces);
    criterion("metrics agree with a naive oracle and with hand values on the toy bundle", metric_agreement);
    criterion("DKW bound holds empirically for Uniform(0,1) sample maxima", dkw);
    criterion("alpha=0 gives dense order and alpha=1 gives sparse order", interpolation_identities);
    criterion("FFIDX, TREC run and text loader round trips and rejections", format_round_trips);
    criterion("single query at k_s=5000, 768-dim, up to 4 passages re-ranks in under 1 s", latency);
    criterion("selective token retention length, order and padding-first removal", selective_filter);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
