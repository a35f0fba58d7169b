#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "s3/error.hpp"
#include "s3/fql.hpp"
#include "s3/metadata.hpp"
#include "s3/ragdoc.hpp"

namespace s3::llm {

/// Prompt budgets are estimated from character counts.
inline constexpr std::size_t kCharsPerToken = 4;

std::size_t estimate_tokens(std::string_view text) noexcept;

struct Capabilities {
  std::size_t max_context_tokens = 4096;
};

struct CompletionParams {
  double temperature = 0.0;
  std::size_t max_tokens = 512;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string id() const = 0;
  virtual Capabilities capabilities() const = 0;
  /// Throws Errc::BackendError on transport or protocol failure.
  virtual std::string complete(const std::string& prompt, const CompletionParams& params) = 0;
};

/// Scriptable offline backend. Rules are checked in order: fingerprint
/// matches, substring matches, then the FIFO queue of scripted responses.
/// Unmatched prompts get the unscripted behavior.
class MockBackend final : public ChatBackend {
 public:
  enum class Unscripted {
    Empty,        // reply ""
    EchoContext,  // reply with the first cited passage under "### Context"
  };

  explicit MockBackend(Unscripted unscripted = Unscripted::Empty,
                       Capabilities caps = {}, std::string id = "mock");

  std::string id() const override { return id_; }
  Capabilities capabilities() const override { return caps_; }
  std::string complete(const std::string& prompt, const CompletionParams& params) override;

  static std::string fingerprint(std::string_view prompt);

  void script(std::string response);
  void on_fingerprint(std::string fingerprint, std::string response);
  void on_contains(std::string needle, std::string response);
  /// Next call fails with Errc::BackendError.
  void fail_next(std::string message);

  /// JSON lines: {"response": ...} plus optional "fingerprint" or "contains".
  void load_script(const std::filesystem::path& path);

  std::vector<std::string> prompts() const;

 private:
  mutable std::mutex mu_;
  Unscripted unscripted_;
  Capabilities caps_;
  std::string id_;
  std::vector<std::pair<std::string, std::string>> by_fingerprint_;
  std::vector<std::pair<std::string, std::string>> by_contains_;
  std::deque<std::string> queue_;
  std::deque<std::string> failures_;
  std::vector<std::string> prompts_;
};

/// Chat-completions JSON endpoint:
/// POST {model, messages:[{role, content}], temperature, max_tokens}
///   -> {choices:[{message:{content}}]}.
class GenericHttpBackend final : public ChatBackend {
 public:
  GenericHttpBackend(std::string url, std::string model, std::optional<std::string> api_key,
                     Capabilities caps = {});

  std::string id() const override { return "http:" + model_; }
  Capabilities capabilities() const override { return caps_; }
  std::string complete(const std::string& prompt, const CompletionParams& params) override;

 private:
  std::string url_;
  std::string model_;
  std::optional<std::string> api_key_;
  Capabilities caps_;
};

// ---------------------------------------------------------------------------
// Lexicon
// ---------------------------------------------------------------------------

enum class Category { Library, Version, Enumeration };

std::string_view category_name(Category c) noexcept;

struct LexiconEntry {
  std::string term;
  std::vector<std::string> aliases;
  std::vector<std::string> keywords;
  std::vector<std::string> labels;  // enumeration: one label per keyword
  std::optional<std::string> version_tag;
  std::optional<std::string> family;  // version entries sharing a MAX query
  Category category = Category::Library;

  bool operator==(const LexiconEntry&) const = default;
};

using Lexicon = std::vector<LexiconEntry>;

/// INI-style sections, one per term. Throws Errc::DuplicateTerm,
/// Errc::BadVersionTag, Errc::LexiconFormat.
Lexicon parse_lexicon(std::string_view text);
Lexicon load_lexicon(const std::filesystem::path& path);
Lexicon builtin_lexicon();

/// Example FQL question/answer text for one entry (used to seed retrieval).
std::string render_lexicon_example(const LexiconEntry& entry, const Lexicon& lexicon);

/// Deterministic question -> query synthesis from the lexicon. The entry with
/// the longest alias found in the question wins. Throws Errc::NoLexiconMatch.
fql::FqlQuery fallback_query(std::string_view question, const Lexicon& lexicon);

/// Handbook chunks plus one rendered example per lexicon entry.
ragdoc::ChunkIndex build_example_index(const ragdoc::Embedder& embedder, const Lexicon& lexicon,
                                       std::string_view handbook);
std::string builtin_handbook();

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

enum class Mode { Fql, Metadata, Docs };

std::string_view mode_name(Mode m) noexcept;
std::optional<Mode> mode_from_name(std::string_view name) noexcept;

struct Turn {
  enum class Role { User, Assistant } role = Role::User;
  std::string text;
  nlohmann::json artifacts;  // null when absent

  bool operator==(const Turn&) const = default;
};

struct Session {
  std::string id;
  Mode mode = Mode::Docs;
  std::vector<Turn> turns;
  std::size_t token_budget = 4096;

  /// Appends a user turn and its assistant reply.
  void add_exchange(std::string question, std::string answer, nlohmann::json artifacts = nullptr);

  bool operator==(const Session&) const = default;
};

// ---------------------------------------------------------------------------
// Translation pipelines
// ---------------------------------------------------------------------------

enum class Source { Llm, Fallback };

/// Both LLM attempts failed and so did the step after them (lexicon fallback
/// or plan validation). Carries what the client needs to see.
class TranslationError : public Error {
 public:
  TranslationError(Errc code, const std::string& message, std::string parse_error, std::string raw_response,
                   int attempts)
      : Error(code, message),
        parse_error_(std::move(parse_error)),
        raw_response_(std::move(raw_response)),
        attempts_(attempts) {}

  const std::string& parse_error() const noexcept { return parse_error_; }
  const std::string& raw_response() const noexcept { return raw_response_; }
  int attempts() const noexcept { return attempts_; }

 private:
  std::string parse_error_;
  std::string raw_response_;
  int attempts_;
};

struct FqlTranslation {
  fql::FqlQuery query;
  std::string raw_response;
  Source source = Source::Llm;
  int attempts = 0;
  std::optional<std::string> parse_error;  // last LLM-side failure, if any
};

/// Text of the first CHECK/MAX/LIST expression in free-form output, or
/// nullopt when none parses.
std::optional<std::string> extract_fql(std::string_view response);

struct FqlTranslatorOptions {
  std::size_t examples_k = 4;
  CompletionParams params{};
};

class FqlTranslator {
 public:
  FqlTranslator(const Lexicon& lexicon, const ragdoc::ChunkIndex& examples,
                const ragdoc::Embedder& embedder, const ragdoc::TemplateSet& templates,
                FqlTranslatorOptions options = {});

  /// Throws TranslationError (Errc::NoLexiconMatch) when both LLM attempts
  /// and the fallback fail; Errc::BackendError propagates.
  FqlTranslation translate(std::string_view question, ChatBackend& backend) const;

  std::string build_prompt(std::string_view question, std::size_t budget_chars) const;

 private:
  const Lexicon& lexicon_;
  const ragdoc::ChunkIndex& examples_;
  const ragdoc::Embedder& embedder_;
  const ragdoc::TemplateSet& templates_;
  FqlTranslatorOptions options_;
};

enum class Shots { Zero, Few };

struct SqlText {
  std::string sql;
  bool operator==(const SqlText&) const = default;
};

struct TableTranslation {
  std::variant<metadata::QueryPlan, SqlText> result;
  std::string raw_response;
  int attempts = 0;
};

struct TableExample {
  std::string question;
  std::string answer;
};

std::string build_table_prompt(const ragdoc::TemplateSet& templates, std::string_view question,
                               const metadata::TableCatalog& tables, Shots shots,
                               const std::vector<TableExample>& examples);

/// Throws TranslationError (Errc::UnparseablePlan or
/// Errc::UnknownColumnInPlan) after the retry.
TableTranslation translate_to_table_query(std::string_view question, const metadata::TableCatalog& tables,
                                          ChatBackend& backend, const ragdoc::TemplateSet& templates,
                                          Shots shots = Shots::Zero,
                                          const std::vector<TableExample>& examples = {});

struct Answer {
  std::string text;
  std::vector<std::pair<std::string, std::size_t>> citations;
  std::string prompt;
};

struct AnswerOptions {
  std::size_t k = 4;
  CompletionParams params{};
};

/// Retrieval, prompt assembly with session history (oldest exchanges
/// dropped first to meet the budget), completion, then the exchange is
/// appended to the session.
Answer answer_with_context(Session& session, std::string_view question, const ragdoc::ChunkIndex& index,
                           const ragdoc::Embedder& embedder, ChatBackend& backend,
                           const ragdoc::TemplateSet& templates, const AnswerOptions& options = {});

}  // namespace s3::llm
