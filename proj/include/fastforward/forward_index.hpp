#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fastforward/error.hpp"
#include "fastforward/vector.hpp"

namespace fastforward {

/// Read-only view of the passage vectors of one document, in original passage order.
class PassageView {
  public:
    PassageView(std::span<const float> block, std::size_t dim) : block_(block), dim_(dim) {}

    [[nodiscard]] std::size_t size() const noexcept { return dim_ == 0 ? 0 : block_.size() / dim_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::span<const float> operator[](std::size_t i) const noexcept {
        return block_.subspan(i * dim_, dim_);
    }
    [[nodiscard]] std::span<const float> block() const noexcept { return block_; }

  private:
    std::span<const float> block_;
    std::size_t dim_;
};

struct CoalescingReport {
    std::size_t docs_processed = 0;
    std::size_t vectors_before = 0;
    std::size_t vectors_after = 0;
    double delta = 0.0;

    /// Fraction of vectors removed, in [0, 1).
    [[nodiscard]] double reduction() const noexcept {
        return vectors_before == 0
                   ? 0.0
                   : 1.0 - static_cast<double>(vectors_after) / static_cast<double>(vectors_before);
    }
};

/// Forward index: document ID -> ordered passage vectors.
///
/// Vectors live in one contiguous float block; each document owns a contiguous slice of it,
/// located through a hash map keyed by document ID. Documents are kept in insertion order so
/// that serialization is deterministic.
class ForwardIndex {
  public:
    struct Document {
        std::string id;
        std::vector<DenseVector> passages;
    };

    explicit ForwardIndex(std::size_t dim, bool normalized = false) : dim_(dim), normalized_(normalized) {
        if (dim == 0) {
            throw DomainError("forward index dimension must be positive");
        }
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] bool normalized() const noexcept { return normalized_; }
    [[nodiscard]] std::size_t size() const noexcept { return slots_.size(); }
    [[nodiscard]] bool empty() const noexcept { return slots_.empty(); }
    [[nodiscard]] std::size_t vector_count() const noexcept { return data_.size() / dim_; }

    [[nodiscard]] bool contains(std::string_view doc_id) const { return by_id_.find(doc_id) != by_id_.end(); }

    [[nodiscard]] std::optional<PassageView> find(std::string_view doc_id) const {
        auto it = by_id_.find(doc_id);
        if (it == by_id_.end()) {
            return std::nullopt;
        }
        return view(it->second);
    }

    [[nodiscard]] PassageView passages(std::string_view doc_id) const {
        auto found = find(doc_id);
        if (!found) {
            throw MissingDocumentError(std::string(doc_id));
        }
        return *found;
    }

    /// Copies out the passage vectors of a document.
    [[nodiscard]] std::vector<DenseVector> lookup(std::string_view doc_id) const {
        auto pv = passages(doc_id);
        std::vector<DenseVector> out;
        out.reserve(pv.size());
        for (std::size_t i = 0; i < pv.size(); ++i) {
            out.emplace_back(pv[i]);
        }
        return out;
    }

    /// Document IDs in insertion order.
    [[nodiscard]] std::vector<std::string_view> doc_ids() const {
        std::vector<std::string_view> ids;
        ids.reserve(slots_.size());
        for (const auto& s : slots_) {
            ids.emplace_back(s.id);
        }
        return ids;
    }

    [[nodiscard]] std::string_view doc_id_at(std::size_t i) const { return slots_.at(i).id; }
    [[nodiscard]] PassageView passages_at(std::size_t i) const { return view(i); }

    /// Appends one document given as a flat block of `count * dim` floats.
    void add_document(std::string doc_id, std::span<const float> block) {
        check_new(doc_id, block);
        insert(std::move(doc_id), block);
    }

    void add_document(std::string doc_id, std::span<const DenseVector> passages) {
        const Document doc{std::move(doc_id), {passages.begin(), passages.end()}};
        add_documents(std::span<const Document>(&doc, 1));
    }

    /// Adds a batch of documents. The batch is validated as a whole first, so a failing batch
    /// leaves the index untouched.
    void add_documents(std::span<const Document> batch) {
        std::unordered_map<std::string_view, bool> seen;
        for (const auto& doc : batch) {
            if (doc.passages.empty()) {
                throw EmptyInputError("document without passages: " + doc.id);
            }
            if (contains(doc.id) || !seen.emplace(doc.id, true).second) {
                throw DuplicateDocumentError(doc.id);
            }
            for (const auto& p : doc.passages) {
                if (p.dim() != dim_) {
                    throw DimensionError(dim_, p.dim());
                }
            }
        }
        std::vector<float> block;
        for (const auto& doc : batch) {
            block.clear();
            for (const auto& p : doc.passages) {
                block.insert(block.end(), p.begin(), p.end());
            }
            insert(doc.id, block);
        }
    }

    friend bool operator==(const ForwardIndex& a, const ForwardIndex& b) {
        if (a.dim_ != b.dim_ || a.normalized_ != b.normalized_ || a.slots_.size() != b.slots_.size()) {
            return false;
        }
        for (std::size_t i = 0; i < a.slots_.size(); ++i) {
            if (a.slots_[i].id != b.slots_[i].id) {
                return false;
            }
            auto x = a.view(i).block();
            auto y = b.view(i).block();
            if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) {
                return false;
            }
        }
        return true;
    }

  private:
    struct Slot {
        std::string id;
        std::size_t offset;
        std::size_t count;
    };

    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
    };

    [[nodiscard]] PassageView view(std::size_t slot) const {
        const auto& s = slots_[slot];
        return {std::span<const float>(data_).subspan(s.offset, s.count * dim_), dim_};
    }

    void check_new(const std::string& doc_id, std::span<const float> block) const {
        if (block.empty()) {
            throw EmptyInputError("document without passages: " + doc_id);
        }
        if (block.size() % dim_ != 0) {
            throw DimensionError(dim_, block.size() % dim_);
        }
        if (contains(doc_id)) {
            throw DuplicateDocumentError(doc_id);
        }
        for (float x : block) {
            if (!std::isfinite(x)) {
                throw DomainError("non-finite value in passage vectors of " + doc_id);
            }
        }
    }

    void insert(std::string doc_id, std::span<const float> block) {
        const std::size_t offset = data_.size();
        data_.insert(data_.end(), block.begin(), block.end());
        by_id_.emplace(doc_id, slots_.size());
        slots_.push_back({std::move(doc_id), offset, block.size() / dim_});
    }

    std::size_t dim_;
    bool normalized_;
    std::vector<float> data_;
    std::vector<Slot> slots_;
    std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> by_id_;
};

/// maxP score: the highest dot product between the query and any passage of the document.
inline double score_maxp(PassageView passages, std::span<const float> query) {
    if (query.size() != passages.dim()) {
        throw DimensionError(passages.dim(), query.size());
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < passages.size(); ++i) {
        best = std::max(best, dot(query, passages[i]));
    }
    return best;
}

inline double score_maxp(const ForwardIndex& index, const DenseVector& query, std::string_view doc_id) {
    if (query.dim() != index.dim()) {
        throw DimensionError(index.dim(), query.dim());
    }
    return score_maxp(index.passages(doc_id), query.values());
}

namespace detail {

// Zero vectors have no direction; they are treated as orthogonal to everything when coalescing.
inline double coalescing_distance(std::span<const float> a, std::span<const float> b) {
    if (l2_norm(a) == 0.0 || l2_norm(b) == 0.0) {
        return 1.0;
    }
    return cosine_distance(a, b);
}

} // namespace detail

/// Sequential coalescing of one document's passages. Walks the passages in order keeping a
/// running group; a passage whose cosine distance to the group mean is >= delta closes the
/// group, which is emitted as its mean. The last group is always emitted.
inline std::vector<DenseVector> coalesce_passages(PassageView passages, double delta) {
    std::vector<DenseVector> out;
    std::vector<std::span<const float>> group;
    DenseVector group_mean;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        const auto v = passages[i];
        if (i > 0 && detail::coalescing_distance(v, group_mean.values()) >= delta) {
            out.push_back(std::move(group_mean));
            group.clear();
        }
        group.push_back(v);
        group_mean = mean(std::span<const std::span<const float>>(group));
    }
    if (!group.empty()) {
        out.push_back(std::move(group_mean));
    }
    return out;
}

/// Coalesces every document of `index`. The result is not re-normalized, so its normalized
/// flag is cleared.
inline std::pair<ForwardIndex, CoalescingReport> coalesce(const ForwardIndex& index, double delta) {
    if (!(delta >= 0.0)) {
        throw DomainError("coalescing threshold must be >= 0");
    }
    ForwardIndex out(index.dim(), false);
    CoalescingReport report;
    report.delta = delta;
    std::vector<float> block;
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto pv = index.passages_at(i);
        auto merged = coalesce_passages(pv, delta);
        block.clear();
        for (const auto& v : merged) {
            block.insert(block.end(), v.begin(), v.end());
        }
        out.add_document(std::string(index.doc_id_at(i)), block);
        report.docs_processed += 1;
        report.vectors_before += pv.size();
        report.vectors_after += merged.size();
    }
    return {std::move(out), report};
}

} // namespace fastforward
