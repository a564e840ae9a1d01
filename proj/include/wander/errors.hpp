#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace wander {

/// Coarse category used by the CLI to pick an exit code.
enum class ErrorCategory {
  config,  // exit 2
  data,    // exit 3
  stage,   // exit 4
};

/// Base class of every error the library throws. `kind()` is a stable
/// machine-readable name (e.g. "DuplicateId").
class Error : public std::runtime_error {
 public:
  Error(std::string kind, ErrorCategory category, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)), category_(category) {}

  const std::string& kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_; }

 private:
  std::string kind_;
  ErrorCategory category_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("IoError", ErrorCategory::data, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error("ConfigError", ErrorCategory::config, message) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error("InvalidArgument", ErrorCategory::config, message) {}
};

// corpus

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line_no, const std::string& detail)
      : Error("MalformedRecord", ErrorCategory::data,
              "malformed record at line " + std::to_string(line_no) + ": " + detail),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& id)
      : Error("DuplicateId", ErrorCategory::data, "duplicate document id \"" + id + "\""), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class EmptyText : public Error {
 public:
  explicit EmptyText(const std::string& id)
      : Error("EmptyText", ErrorCategory::data, "document \"" + id + "\" has empty text"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class InvalidLabelSpec : public Error {
 public:
  explicit InvalidLabelSpec(const std::string& message)
      : Error("InvalidLabelSpec", ErrorCategory::data, message) {}
};

// embed-store

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("DimensionMismatch", ErrorCategory::data,
              "dimension mismatch: expected " + std::to_string(expected) + ", got " +
                  std::to_string(got)),
        expected_(expected),
        got_(got) {}
  std::size_t expected() const noexcept { return expected_; }
  std::size_t got() const noexcept { return got_; }

 private:
  std::size_t expected_;
  std::size_t got_;
};

class CorruptHeader : public Error {
 public:
  explicit CorruptHeader(const std::string& message)
      : Error("CorruptHeader", ErrorCategory::data, message) {}
};

class MissingDocVector : public Error {
 public:
  explicit MissingDocVector(const std::string& id)
      : Error("MissingDocVector", ErrorCategory::data, "no document vector for \"" + id + "\""),
        id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class NoKnownTokens : public Error {
 public:
  explicit NoKnownTokens(const std::string& query)
      : Error("NoKnownTokens", ErrorCategory::stage,
              "no in-vocabulary tokens in query \"" + query + "\""),
        query_(query) {}
  const std::string& query() const noexcept { return query_; }

 private:
  std::string query_;
};

class ZeroNorm : public Error {
 public:
  ZeroNorm() : Error("ZeroNorm", ErrorCategory::stage, "cosine of a zero-norm vector") {}
};

class EmbedderFailure : public Error {
 public:
  explicit EmbedderFailure(const std::string& message)
      : Error("EmbedderFailure", ErrorCategory::stage, message) {}
};

// retrieval

/// Wraps a per-class failure so the caller knows which label name broke.
class ClassQueryError : public Error {
 public:
  ClassQueryError(int class_id, const Error& cause)
      : Error(cause.kind(), cause.category(),
              "class " + std::to_string(class_id) + ": " + cause.what()),
        class_id_(class_id) {}
  int class_id() const noexcept { return class_id_; }

 private:
  int class_id_;
};

// expansion

class InconsistentCounts : public Error {
 public:
  explicit InconsistentCounts(const std::string& token)
      : Error("InconsistentCounts", ErrorCategory::stage,
              "corpus count below class count for token \"" + token + "\""),
        token_(token) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

class EmptyCandidatePool : public Error {
 public:
  explicit EmptyCandidatePool(int class_id)
      : Error("EmptyCandidatePool", ErrorCategory::stage,
              "no expansion candidates left for class " + std::to_string(class_id)),
        class_id_(class_id) {}
  int class_id() const noexcept { return class_id_; }

 private:
  int class_id_;
};

// classifier

class DegenerateLabels : public Error {
 public:
  explicit DegenerateLabels(const std::string& message)
      : Error("DegenerateLabels", ErrorCategory::stage, message) {}
};

// eval

class IdSetMismatch : public Error {
 public:
  explicit IdSetMismatch(const std::string& message)
      : Error("IdSetMismatch", ErrorCategory::data, message) {}
};

}  // namespace wander
