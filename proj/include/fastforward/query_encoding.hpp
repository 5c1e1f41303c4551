#pragma once

#include <cctype>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fastforward/detail/text.hpp"
#include "fastforward/error.hpp"
#include "fastforward/reranker.hpp"
#include "fastforward/vector.hpp"

namespace fastforward {

/// Handling of query tokens that have no embedding.
struct UnknownTokenPolicy {
    enum class Kind { skip, error, substitute };

    Kind kind = Kind::skip;
    /// Replacement token for Kind::substitute, e.g. "[UNK]".
    std::string token;

    static UnknownTokenPolicy skip() { return {}; }
    static UnknownTokenPolicy error() { return {Kind::error, {}}; }
    static UnknownTokenPolicy substitute(std::string tok) { return {Kind::substitute, std::move(tok)}; }
};

inline constexpr std::string_view kSubwordMarker = "##";

/// Token -> embedding map backing the embedding-average query encoder.
class EmbeddingTable {
  public:
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {
        if (dim == 0) {
            throw DomainError("embedding dimension must be positive");
        }
    }

    void add(std::string token, DenseVector embedding) {
        if (embedding.dim() != dim_) {
            throw DimensionError(dim_, embedding.dim());
        }
        if (token.starts_with(kSubwordMarker)) {
            subwords_ = true;
        }
        if (!entries_.emplace(std::move(token), std::move(embedding)).second) {
            throw Error("duplicate token in embedding table");
        }
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool has_subword_markers() const noexcept { return subwords_; }
    [[nodiscard]] bool contains(std::string_view token) const { return entries_.find(token) != entries_.end(); }

    [[nodiscard]] const DenseVector* find(std::string_view token) const {
        auto it = entries_.find(token);
        return it == entries_.end() ? nullptr : &it->second;
    }

  private:
    struct StringHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
    };

    std::size_t dim_;
    bool subwords_ = false;
    std::unordered_map<std::string, DenseVector, StringHash, std::equal_to<>> entries_;
};

/// Parses the embedding-table text format: `#dim <d>` header, then `token<TAB>floats` lines.
inline EmbeddingTable parse_embedding_table(std::string_view text) {
    std::optional<EmbeddingTable> table;
    detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (!table) {
            auto f = detail::split_ws(line);
            if (f.size() != 2 || f[0] != "#dim") {
                throw FormatError("expected '#dim <d>' header", line_no);
            }
            const auto dim = detail::parse_number<std::size_t>(f[1], line_no, "dimension");
            if (dim == 0) {
                throw FormatError("zero dimension", line_no);
            }
            table.emplace(dim);
            return;
        }
        if (line.empty()) {
            return;
        }
        auto fields = detail::split_tab(line);
        if (fields.size() != 2 || fields[0].empty()) {
            throw FormatError("expected token<TAB>vector", line_no);
        }
        auto values = detail::parse_floats(fields[1], line_no);
        if (values.size() != table->dim()) {
            throw FormatError("embedding has dimension " + std::to_string(values.size()) + ", expected " +
                                  std::to_string(table->dim()),
                              line_no);
        }
        if (table->contains(fields[0])) {
            throw FormatError("duplicate token '" + std::string(fields[0]) + "'", line_no);
        }
        try {
            table->add(std::string(fields[0]), DenseVector(std::move(values)));
        } catch (const DomainError& e) {
            throw FormatError(e.what(), line_no);
        }
    });
    if (!table) {
        throw FormatError("missing '#dim <d>' header", 1);
    }
    if (table->size() == 0) {
        throw FormatError("embedding table has no entries", 1);
    }
    return std::move(*table);
}

inline EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
    return parse_embedding_table(detail::read_file(path));
}

namespace detail {

inline bool is_word_byte(char c) noexcept {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u) != 0;
}

// Greedy longest-prefix split of one word into table entries; continuation pieces carry the
// subword marker. Words that cannot be fully split stay whole.
inline void split_word(std::string_view word, const EmbeddingTable& table, std::vector<std::string>& out) {
    std::vector<std::string> pieces;
    std::size_t start = 0;
    std::string candidate;
    while (start < word.size()) {
        std::size_t end = word.size();
        bool matched = false;
        for (; end > start; --end) {
            candidate.assign(start == 0 ? "" : kSubwordMarker);
            candidate.append(word.substr(start, end - start));
            if (table.contains(candidate)) {
                matched = true;
                break;
            }
        }
        if (!matched) {
            out.emplace_back(word);
            return;
        }
        pieces.push_back(candidate);
        start = end;
    }
    out.insert(out.end(), pieces.begin(), pieces.end());
}

} // namespace detail

/// Lowercases ASCII letters and splits on whitespace and punctuation. When the table contains
/// subword entries ("##..."), each word is further split by greedy longest match.
inline std::vector<std::string> tokenize(std::string_view text, const EmbeddingTable& table) {
    std::vector<std::string> words;
    std::string current;
    for (char c : text) {
        if (detail::is_word_byte(c)) {
            current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        words.push_back(std::move(current));
    }
    if (!table.has_subword_markers()) {
        return words;
    }
    std::vector<std::string> tokens;
    for (const auto& w : words) {
        detail::split_word(w, table, tokens);
    }
    return tokens;
}

struct EncoderOptions {
    UnknownTokenPolicy unknown = UnknownTokenPolicy::skip();
    /// Add the [CLS]/[SEP] embeddings to the average.
    bool include_special = false;
    std::string cls_token = "[CLS]";
    std::string sep_token = "[SEP]";
};

/// Mean of the embeddings of the tokens that resolve under the unknown-token policy.
inline DenseVector encode_embedding_average(std::span<const std::string> tokens, const EmbeddingTable& table,
                                            const EncoderOptions& opts = {}) {
    std::vector<std::span<const float>> rows;
    rows.reserve(tokens.size() + 2);
    auto require = [&](const std::string& tok) {
        const auto* e = table.find(tok);
        if (e == nullptr) {
            throw UnknownTokenError(tok);
        }
        rows.push_back(e->values());
    };
    if (opts.include_special) {
        require(opts.cls_token);
    }
    for (const auto& t : tokens) {
        if (const auto* e = table.find(t)) {
            rows.push_back(e->values());
            continue;
        }
        switch (opts.unknown.kind) {
        case UnknownTokenPolicy::Kind::skip:
            break;
        case UnknownTokenPolicy::Kind::error:
            throw UnknownTokenError(t);
        case UnknownTokenPolicy::Kind::substitute:
            require(opts.unknown.token);
            break;
        }
    }
    if (opts.include_special) {
        require(opts.sep_token);
    }
    if (rows.empty()) {
        throw EmptyQueryError();
    }
    return mean(std::span<const std::span<const float>>(rows));
}

inline DenseVector encode_query(std::string_view text, const EmbeddingTable& table, const EncoderOptions& opts = {}) {
    const auto tokens = tokenize(text, table);
    return encode_embedding_average(tokens, table, opts);
}

/// Applies the optional projection. Query vectors are deliberately left unnormalized: scaling a
/// query only scales its dense scores.
inline DenseVector finalize_query(const DenseVector& raw, const std::optional<Projection>& projection) {
    if (!projection) {
        return raw;
    }
    return project(*projection, raw);
}

/// Parses `query_id<TAB>floats` lines.
inline QueryVectors parse_query_vectors(std::string_view text) {
    QueryVectors out;
    std::size_t dim = 0;
    detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (detail::trim(line).empty()) {
            return;
        }
        auto fields = detail::split_tab(line);
        if (fields.size() != 2 || fields[0].empty()) {
            throw FormatError("expected query_id<TAB>vector", line_no);
        }
        auto values = detail::parse_floats(fields[1], line_no);
        if (values.empty()) {
            throw FormatError("empty query vector", line_no);
        }
        if (dim == 0) {
            dim = values.size();
        } else if (values.size() != dim) {
            throw FormatError("query vector has dimension " + std::to_string(values.size()) + ", expected " +
                                  std::to_string(dim),
                              line_no);
        }
        DenseVector v;
        try {
            v = DenseVector(std::move(values));
        } catch (const DomainError& e) {
            throw FormatError(e.what(), line_no);
        }
        if (!out.emplace(std::string(fields[0]), std::move(v)).second) {
            throw FormatError("duplicate query '" + std::string(fields[0]) + "'", line_no);
        }
    });
    return out;
}

inline QueryVectors load_precomputed_queries(const std::filesystem::path& path) {
    return parse_query_vectors(detail::read_file(path));
}

inline std::string format_query_vectors(const QueryVectors& queries) {
    std::string out;
    for (const auto& [qid, v] : queries) {
        out += qid;
        out += '\t';
        for (std::size_t i = 0; i < v.dim(); ++i) {
            if (i > 0) {
                out += ' ';
            }
            out += detail::format_float(v[i]);
        }
        out += '\n';
    }
    return out;
}

/// Parses `query_id<TAB>text` lines.
inline std::map<std::string, std::string, std::less<>> parse_query_texts(std::string_view text) {
    std::map<std::string, std::string, std::less<>> out;
    detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (detail::trim(line).empty()) {
            return;
        }
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || tab == 0) {
            throw FormatError("expected query_id<TAB>text", line_no);
        }
        if (!out.emplace(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1))).second) {
            throw FormatError("duplicate query '" + std::string(line.substr(0, tab)) + "'", line_no);
        }
    });
    return out;
}

/// Projection text format: `#projection <out> <in>`, then `out` rows of `in` floats, then one
/// bias row of `out` floats.
inline Projection parse_projection(std::string_view text) {
    std::vector<std::vector<float>> rows;
    std::size_t out_dim = 0;
    std::size_t in_dim = 0;
    bool header = false;
    detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (detail::trim(line).empty()) {
            return;
        }
        if (!header) {
            auto f = detail::split_ws(line);
            if (f.size() != 3 || f[0] != "#projection") {
                throw FormatError("expected '#projection <out> <in>' header", line_no);
            }
            out_dim = detail::parse_number<std::size_t>(f[1], line_no, "output dimension");
            in_dim = detail::parse_number<std::size_t>(f[2], line_no, "input dimension");
            if (out_dim == 0 || in_dim == 0) {
                throw FormatError("zero projection dimension", line_no);
            }
            header = true;
            return;
        }
        auto values = detail::parse_floats(line, line_no);
        const std::size_t expected = rows.size() < out_dim ? in_dim : out_dim;
        if (rows.size() > out_dim || values.size() != expected) {
            throw FormatError("unexpected projection row", line_no);
        }
        rows.push_back(std::move(values));
    });
    if (!header || rows.size() != out_dim + 1) {
        throw FormatError("incomplete projection", 0);
    }
    std::vector<float> weights;
    weights.reserve(out_dim * in_dim);
    for (std::size_t r = 0; r < out_dim; ++r) {
        weights.insert(weights.end(), rows[r].begin(), rows[r].end());
    }
    return {out_dim, in_dim, std::move(weights), DenseVector(std::move(rows.back()))};
}

} // namespace fastforward
