#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace s3 {

enum class Errc {
  // fql
  SyntaxError,
  EmptyPattern,
  BadVersionTag,
  // corpus
  RootNotFound,
  PermissionDenied,
  // metadata
  NotADigraph,
  MalformedEdge,
  UnsupportedDot,
  UnknownFunction,
  RaggedRow,
  DuplicateKey,
  UnknownTable,
  UnknownColumn,
  RaggedMatrix,
  UnknownRole,
  DuplicateVariable,
  IndexOutOfRange,
  // ragdoc
  EmptyDocument,
  EmptyIndex,
  EmbedderMismatch,
  TemplateNotFound,
  BudgetTooSmall,
  // llm
  DuplicateTerm,
  LexiconFormat,
  NoLexiconMatch,
  BackendError,
  UnparseablePlan,
  UnknownColumnInPlan,
  // service
  ConfigError,
  UnknownSession,
  SchemaViolation,
  IoError,
  InvalidArgument,
};

std::string_view errc_name(Errc code) noexcept;

/// Base error for every failure surfaced by the toolkit. `location` carries a
/// line number or byte offset when the failing input has one.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> location = std::nullopt)
      : std::runtime_error(message), code_(code), location_(location) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> location() const noexcept { return location_; }

 private:
  Errc code_;
  std::optional<std::size_t> location_;
};

/// FQL syntax failure at a byte offset, with the set of tokens that would
/// have been accepted there.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, std::vector<std::string> expected,
              const std::string& message)
      : Error(Errc::SyntaxError, message, offset),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

}  // namespace s3
