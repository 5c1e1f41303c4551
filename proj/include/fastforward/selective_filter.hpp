#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fastforward/error.hpp"

namespace fastforward {

/// Token rows padded to a common length.
struct TokenBatch {
    std::vector<std::vector<std::string>> rows;
    std::string pad_token = "[PAD]";
    std::size_t max_len = 0;

    /// Pads `rows` to the length of the longest one.
    static TokenBatch from_rows(std::vector<std::vector<std::string>> rows, std::string pad = "[PAD]") {
        std::size_t longest = 0;
        for (const auto& r : rows) {
            longest = std::max(longest, r.size());
        }
        for (auto& r : rows) {
            r.resize(longest, pad);
        }
        return {std::move(rows), std::move(pad), longest};
    }

    /// Tokens of row `i` without padding.
    [[nodiscard]] std::vector<std::string> real_tokens(std::size_t i) const {
        std::vector<std::string> out;
        for (const auto& t : rows.at(i)) {
            if (t != pad_token) {
                out.push_back(t);
            }
        }
        return out;
    }

    friend bool operator==(const TokenBatch&, const TokenBatch&) = default;
};

/// Maps a token to an importance score in [0, 1].
using TokenScorer = std::function<double(std::string_view)>;

/// Number of tokens kept per row: ceil(p * max_len). Products within 1e-9 of an integer are
/// snapped to it so that, e.g., 0.3 * 10 keeps 3 tokens rather than 4.
inline std::size_t retained_length(double p, std::size_t max_len) {
    const double x = p * static_cast<double>(max_len);
    const double nearest = std::round(x);
    if (std::abs(x - nearest) < 1e-9) {
        return static_cast<std::size_t>(nearest);
    }
    return static_cast<std::size_t>(std::ceil(x));
}

/// Keeps the highest-scoring tokens of each row, at most ceil(p * max_len) of them. Padding is
/// dropped before any real token; among equal scores earlier positions survive. Survivors keep
/// their relative order and the rows are re-padded to the longest surviving row.
inline TokenBatch select_tokens(const TokenBatch& batch, const TokenScorer& scorer, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError("keep ratio must lie in [0, 1]");
    }
    const std::size_t target = retained_length(p, batch.max_len);
    TokenBatch out;
    out.pad_token = batch.pad_token;
    out.rows.reserve(batch.rows.size());
    std::vector<std::size_t> positions;
    std::vector<double> scores;
    for (const auto& row : batch.rows) {
        positions.clear();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i] != batch.pad_token) {
                positions.push_back(i);
            }
        }
        if (positions.size() > target) {
            scores.resize(row.size());
            for (auto i : positions) {
                scores[i] = scorer(row[i]);
                if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
                    throw DomainError("token score outside [0, 1] for '" + row[i] + "'");
                }
            }
            std::stable_sort(positions.begin(), positions.end(),
                             [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
            positions.resize(target);
            std::sort(positions.begin(), positions.end());
        }
        std::vector<std::string> kept;
        kept.reserve(positions.size());
        for (auto i : positions) {
            kept.push_back(row[i]);
        }
        out.max_len = std::max(out.max_len, kept.size());
        out.rows.push_back(std::move(kept));
    }
    for (auto& r : out.rows) {
        r.resize(out.max_len, out.pad_token);
    }
    return out;
}

/// Reference scorer: normalized inverse collection frequency, log(1 + N / cf(t)) divided by its
/// maximum over the collection. Tokens never seen in the collection and special tokens score 1.
class IdfScorer {
  public:
    IdfScorer(std::span<const std::vector<std::string>> collection,
              std::vector<std::string> special = {"[CLS]", "[SEP]"})
        : special_(special.begin(), special.end()) {
        std::unordered_map<std::string, std::size_t> cf;
        std::size_t total = 0;
        for (const auto& row : collection) {
            for (const auto& t : row) {
                ++cf[t];
                ++total;
            }
        }
        double top = 0.0;
        for (const auto& [tok, count] : cf) {
            const double w = std::log1p(static_cast<double>(total) / static_cast<double>(count));
            weights_.emplace(tok, w);
            top = std::max(top, w);
        }
        if (top > 0.0) {
            for (auto& [_, w] : weights_) {
                w /= top;
            }
        }
    }

    double operator()(std::string_view token) const {
        const std::string key(token);
        if (special_.contains(key)) {
            return 1.0;
        }
        auto it = weights_.find(key);
        return it == weights_.end() ? 1.0 : it->second;
    }

  private:
    std::unordered_set<std::string> special_;
    std::unordered_map<std::string, double> weights_;
};

} // namespace fastforward
