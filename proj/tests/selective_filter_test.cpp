#include <cmath>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <gtest/gtest.h>

#include "fastforward/selective_filter.hpp"

namespace ff = fastforward;
using Row = std::vector<std::string>;

namespace {

ff::TokenScorer table_scorer(std::unordered_map<std::string, double> scores) {
    return [scores = std::move(scores)](std::string_view t) { return scores.at(std::string(t)); };
}

bool is_subsequence(const Row& sub, const Row& full) {
    std::size_t j = 0;
    for (const auto& t : full) {
        if (j < sub.size() && sub[j] == t) {
            ++j;
        }
    }
    return j == sub.size();
}

} // namespace

TEST(SelectTokens, KeepAllTrimsPadding) {
    auto batch = ff::TokenBatch::from_rows({{"a", "b"}, {"c"}});
    batch.rows[0].resize(5, batch.pad_token);
    batch.rows[1].resize(5, batch.pad_token);
    batch.max_len = 5;
    const auto out = ff::select_tokens(batch, [](std::string_view) { return 0.5; }, 1.0);
    EXPECT_EQ(out, ff::TokenBatch::from_rows({{"a", "b"}, {"c"}}));
}

TEST(SelectTokens, HandRankedScores) {
    const auto batch = ff::TokenBatch::from_rows({{"t1", "t2", "t3", "t4"}});
    const auto scorer = table_scorer({{"t1", 0.9}, {"t2", 0.1}, {"t3", 0.8}, {"t4", 0.4}});
    const auto out = ff::select_tokens(batch, scorer, 0.5);
    EXPECT_EQ(out.rows, (std::vector<Row>{{"t1", "t3"}}));
    EXPECT_EQ(out.max_len, 2U);
}

TEST(SelectTokens, PaddingRemovedFirst) {
    const auto batch = ff::TokenBatch::from_rows({{"a", "b", "c", "d"}, {"x", "y"}});
    const auto scorer = table_scorer({{"a", 0.1}, {"b", 0.9}, {"c", 0.2}, {"d", 0.3}, {"x", 0.0}, {"y", 0.0}});
    const auto out = ff::select_tokens(batch, scorer, 0.5);
    EXPECT_EQ(out.rows, (std::vector<Row>{{"b", "d"}, {"x", "y"}}));
}

TEST(SelectTokens, TiesKeepEarlierPositions) {
    const auto batch = ff::TokenBatch::from_rows({{"a", "b", "c", "d", "e"}});
    const auto out = ff::select_tokens(batch, [](std::string_view) { return 0.3; }, 0.6);
    EXPECT_EQ(out.rows, (std::vector<Row>{{"a", "b", "c"}}));
}

TEST(SelectTokens, ZeroRatioAndDomain) {
    const auto batch = ff::TokenBatch::from_rows({{"a", "b"}});
    const auto out = ff::select_tokens(batch, [](std::string_view) { return 1.0; }, 0.0);
    EXPECT_EQ(out.rows, (std::vector<Row>{{}}));
    EXPECT_EQ(out.max_len, 0U);
    EXPECT_THROW((void)ff::select_tokens(batch, [](std::string_view) { return 1.0; }, 1.5), ff::DomainError);
    EXPECT_THROW((void)ff::select_tokens(batch, [](std::string_view) { return 1.0; }, -0.1), ff::DomainError);
    EXPECT_THROW((void)ff::select_tokens(batch, [](std::string_view) { return 2.0; }, 0.5), ff::DomainError);
}

TEST(SelectTokens, RetainedLengthRounding) {
    EXPECT_EQ(ff::retained_length(0.5, 4), 2U);
    EXPECT_EQ(ff::retained_length(0.5, 5), 3U);
    EXPECT_EQ(ff::retained_length(0.3, 10), 3U);
    EXPECT_EQ(ff::retained_length(0.31, 10), 4U);
    EXPECT_EQ(ff::retained_length(1.0, 7), 7U);
}

TEST(SelectTokens, Properties) {
    std::mt19937_64 rng(61);
    std::uniform_int_distribution<int> len(0, 20);
    std::uniform_int_distribution<int> vocab(0, 30);
    std::uniform_real_distribution<double> ratio(0.0, 1.0);
    std::unordered_map<std::string, double> scores;
    for (int i = 0; i <= 30; ++i) {
        scores["w" + std::to_string(i)] = (i * 7 % 11) / 10.0;
    }
    const auto scorer = table_scorer(scores);
    for (int t = 0; t < 300; ++t) {
        std::vector<Row> rows(1 + t % 6);
        for (auto& r : rows) {
            r.resize(len(rng));
            for (auto& tok : r) {
                tok = "w" + std::to_string(vocab(rng));
            }
        }
        auto batch = ff::TokenBatch::from_rows(rows);
        const double p = ratio(rng);
        const auto out = ff::select_tokens(batch, scorer, p);
        const auto target = ff::retained_length(p, batch.max_len);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto kept = out.real_tokens(i);
            EXPECT_EQ(kept.size(), std::min(target, rows[i].size()));
            EXPECT_TRUE(is_subsequence(kept, rows[i]));
            EXPECT_EQ(out.rows[i].size(), out.max_len);
        }
        // composition with a retain-all pass on a padding-free batch
        if (!rows.empty()) {
            const auto trimmed = ff::select_tokens(batch, scorer, 1.0);
            if (trimmed.max_len == batch.max_len) {
                EXPECT_EQ(ff::select_tokens(trimmed, scorer, p), out);
            }
        }
    }
}

TEST(IdfScorer, RareTokensScoreHigherAndSpecialsPinned) {
    const std::vector<Row> collection{{"the", "cat"}, {"the", "dog"}, {"the", "cat", "sat"}};
    const ff::IdfScorer idf(collection);
    EXPECT_EQ(idf("[CLS]"), 1.0);
    EXPECT_EQ(idf("[SEP]"), 1.0);
    EXPECT_EQ(idf("unseen"), 1.0);
    EXPECT_EQ(idf("sat"), 1.0);
    EXPECT_LT(idf("the"), idf("cat"));
    EXPECT_LT(idf("cat"), idf("dog"));
    EXPECT_GT(idf("the"), 0.0);
    // log(1 + 7/3) / log(1 + 7)
    EXPECT_NEAR(idf("the"), std::log(1.0 + 7.0 / 3.0) / std::log(8.0), 1e-12);
}
