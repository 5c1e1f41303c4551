#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fastforward/detail/text.hpp"
#include "fastforward/error.hpp"
#include "fastforward/forward_index.hpp"

// FFIDX layout, all integers little-endian:
//   "FFIDX" version:u8 | dim:u32 | flags:u8 (bit0 = normalized) | doc_count:u64
//   per document: id_len:u16 | id bytes | passage_count:u32 | passage_count * dim * f32

namespace fastforward {

inline constexpr std::string_view kIndexMagic = "FFIDX";
inline constexpr std::uint8_t kIndexVersion = 1;

namespace detail {

class ByteWriter {
  public:
    template <typename T>
    void put(T value) {
        static_assert(std::is_unsigned_v<T>);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<char>((value >> (8 * i)) & 0xFFU));
        }
    }
    void put_f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
    void put_bytes(std::string_view s) { buf_.append(s); }
    [[nodiscard]] std::string take() && { return std::move(buf_); }

  private:
    std::string buf_;
};

class ByteReader {
  public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    template <typename T>
    T get(const char* what) {
        need(sizeof(T), what);
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            value |= static_cast<T>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return value;
    }
    float get_f32(const char* what) { return std::bit_cast<float>(get<std::uint32_t>(what)); }
    std::string_view get_bytes(std::size_t n, const char* what) {
        need(n, what);
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    [[nodiscard]] std::size_t offset() const noexcept { return pos_; }
    [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }

  private:
    void need(std::size_t n, const char* what) const {
        if (data_.size() - pos_ < n) {
            throw FormatError(std::string("truncated index while reading ") + what, pos_);
        }
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::string serialize_index(const ForwardIndex& index) {
    detail::ByteWriter w;
    w.put_bytes(kIndexMagic);
    w.put(kIndexVersion);
    w.put(static_cast<std::uint32_t>(index.dim()));
    w.put(static_cast<std::uint8_t>(index.normalized() ? 1U : 0U));
    w.put(static_cast<std::uint64_t>(index.size()));
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto id = index.doc_id_at(i);
        if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw Error("document ID longer than 65535 bytes: " + std::string(id.substr(0, 32)) + "...");
        }
        const auto pv = index.passages_at(i);
        w.put(static_cast<std::uint16_t>(id.size()));
        w.put_bytes(id);
        w.put(static_cast<std::uint32_t>(pv.size()));
        for (float x : pv.block()) {
            w.put_f32(x);
        }
    }
    return std::move(w).take();
}

inline ForwardIndex deserialize_index(std::string_view bytes) {
    detail::ByteReader r(bytes);
    if (r.remaining() < kIndexMagic.size() || bytes.substr(0, kIndexMagic.size()) != kIndexMagic) {
        throw FormatError("bad magic, not an FFIDX file", 0);
    }
    r.get_bytes(kIndexMagic.size(), "magic");
    const auto version = r.get<std::uint8_t>("version");
    if (version != kIndexVersion) {
        throw VersionError(version, kIndexVersion);
    }
    const auto dim_offset = r.offset();
    const auto dim = r.get<std::uint32_t>("dimension");
    if (dim == 0) {
        throw FormatError("zero dimension", dim_offset);
    }
    const auto flags_offset = r.offset();
    const auto flags = r.get<std::uint8_t>("flags");
    if ((flags & ~1U) != 0) {
        throw FormatError("unknown flag bits", flags_offset);
    }
    const auto doc_count = r.get<std::uint64_t>("document count");

    ForwardIndex index(dim, (flags & 1U) != 0);
    std::vector<float> block;
    for (std::uint64_t d = 0; d < doc_count; ++d) {
        const auto id_len = r.get<std::uint16_t>("document ID length");
        const auto doc_offset = r.offset();
        std::string id(r.get_bytes(id_len, "document ID"));
        const auto count_offset = r.offset();
        const auto count = r.get<std::uint32_t>("passage count");
        if (count == 0) {
            throw FormatError("document without passages: " + id, count_offset);
        }
        if (static_cast<std::uint64_t>(count) * dim * sizeof(float) > r.remaining()) {
            throw FormatError("truncated index while reading passage vectors", r.offset());
        }
        block.resize(static_cast<std::size_t>(count) * dim);
        for (auto& x : block) {
            x = r.get_f32("passage vector");
        }
        if (index.contains(id)) {
            throw FormatError("duplicate document ID " + id, doc_offset);
        }
        try {
            index.add_document(std::move(id), block);
        } catch (const DomainError& e) {
            throw FormatError(e.what(), doc_offset);
        }
    }
    if (r.remaining() != 0) {
        throw FormatError("trailing bytes after last document", r.offset());
    }
    return index;
}

inline void save_index(const ForwardIndex& index, const std::filesystem::path& path) {
    detail::write_file_atomic(path, serialize_index(index));
}

inline ForwardIndex load_index(const std::filesystem::path& path) {
    return deserialize_index(detail::read_file(path));
}

/// Parses the passage interchange text format: one line per passage,
/// `doc_id<TAB>passage_index<TAB>space-separated floats`. Passages of a document are ordered by
/// passage index; documents keep the order of their first appearance.
inline std::vector<ForwardIndex::Document> parse_passage_vectors(std::string_view text) {
    struct Pending {
        std::map<std::uint64_t, DenseVector> passages;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, Pending> docs;
    std::size_t dim = 0;
    detail::for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (detail::trim(line).empty()) {
            return;
        }
        auto fields = detail::split_tab(line);
        if (fields.size() != 3) {
            throw FormatError("expected doc_id<TAB>passage_index<TAB>vector", line_no);
        }
        std::string doc_id(fields[0]);
        if (doc_id.empty()) {
            throw FormatError("empty document ID", line_no);
        }
        const auto pidx = detail::parse_number<std::uint64_t>(fields[1], line_no, "passage index");
        auto values = detail::parse_floats(fields[2], line_no);
        if (values.empty()) {
            throw FormatError("empty passage vector", line_no);
        }
        if (dim == 0) {
            dim = values.size();
        } else if (values.size() != dim) {
            throw FormatError("passage vector has dimension " + std::to_string(values.size()) +
                                  ", expected " + std::to_string(dim),
                              line_no);
        }
        DenseVector vec;
        try {
            vec = DenseVector(std::move(values));
        } catch (const DomainError& e) {
            throw FormatError(e.what(), line_no);
        }
        auto [it, fresh] = docs.try_emplace(doc_id);
        if (fresh) {
            order.push_back(doc_id);
        }
        if (!it->second.passages.emplace(pidx, std::move(vec)).second) {
            throw FormatError("duplicate passage " + std::to_string(pidx) + " of document " + doc_id,
                              line_no);
        }
    });
    std::vector<ForwardIndex::Document> out;
    out.reserve(order.size());
    for (auto& id : order) {
        auto& pending = docs[id];
        ForwardIndex::Document doc{id, {}};
        for (auto& [_, v] : pending.passages) {
            doc.passages.push_back(std::move(v));
        }
        out.push_back(std::move(doc));
    }
    return out;
}

/// Builds an index from the passage interchange format.
inline ForwardIndex index_from_passage_vectors(std::string_view text, bool normalized = false) {
    auto docs = parse_passage_vectors(text);
    if (docs.empty()) {
        throw FormatError("no passages in input", 0);
    }
    ForwardIndex index(docs.front().passages.front().dim(), normalized);
    index.add_documents(docs);
    return index;
}

inline std::string format_passage_vectors(const ForwardIndex& index) {
    std::string out;
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto pv = index.passages_at(i);
        for (std::size_t p = 0; p < pv.size(); ++p) {
            out.append(index.doc_id_at(i));
            out += '\t';
            out += std::to_string(p);
            out += '\t';
            const auto v = pv[p];
            for (std::size_t j = 0; j < v.size(); ++j) {
                if (j > 0) {
                    out += ' ';
                }
                out += detail::format_float(v[j]);
            }
            out += '\n';
        }
    }
    return out;
}

} // namespace fastforward
