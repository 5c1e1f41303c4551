#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fastforward {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  public:
    DimensionError(std::size_t expected, std::size_t actual)
        : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(actual)),
          expected_(expected), actual_(actual) {}

    [[nodiscard]] std::size_t expected() const noexcept { return expected_; }
    [[nodiscard]] std::size_t actual() const noexcept { return actual_; }

  private:
    std::size_t expected_;
    std::size_t actual_;
};

class ZeroVectorError : public Error {
  public:
    ZeroVectorError() : Error("operation undefined for a zero vector") {}
};

class EmptyInputError : public Error {
  public:
    using Error::Error;
};

/// A numeric argument outside its admissible range (alpha, tau, keep ratio, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

class MissingDocumentError : public Error {
  public:
    explicit MissingDocumentError(std::string doc_id)
        : Error("document not in forward index: " + doc_id), doc_id_(std::move(doc_id)) {}

    [[nodiscard]] const std::string& doc_id() const noexcept { return doc_id_; }

  private:
    std::string doc_id_;
};

class MissingQueryError : public Error {
  public:
    explicit MissingQueryError(std::string query_id)
        : Error("no query vector for query: " + query_id), query_id_(std::move(query_id)) {}

    [[nodiscard]] const std::string& query_id() const noexcept { return query_id_; }

  private:
    std::string query_id_;
};

class DuplicateDocumentError : public Error {
  public:
    explicit DuplicateDocumentError(const std::string& doc_id)
        : Error("document already indexed: " + doc_id) {}
};

/// Malformed input. For binary inputs `offset()` is the byte position where parsing failed;
/// for text inputs it is the 1-based line number.
class FormatError : public Error {
  public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (at " + std::to_string(offset) + ")"), offset_(offset) {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

  private:
    std::size_t offset_;
};

class VersionError : public Error {
  public:
    VersionError(unsigned found, unsigned supported)
        : Error("unsupported index version " + std::to_string(found) + " (supported: " +
                std::to_string(supported) + ")") {}
};

class EmptyQueryError : public Error {
  public:
    EmptyQueryError() : Error("no token of the query has an embedding") {}
};

class UnknownTokenError : public Error {
  public:
    explicit UnknownTokenError(const std::string& token)
        : Error("token not in embedding table: " + token) {}
};

} // namespace fastforward
