#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "s3/corpus.hpp"

namespace s3::fql {

/// Literal alternatives joined by `||`; a line matches if any term occurs in it.
struct Pattern {
  std::vector<std::string> terms;

  bool operator==(const Pattern&) const = default;
};

struct Wildcard {
  bool operator==(const Wildcard&) const = default;
};

struct FileFilter {
  std::variant<Wildcard, std::vector<std::string>> spec;

  bool is_wildcard() const noexcept { return std::holds_alternative<Wildcard>(spec); }
  bool accepts(std::string_view relative_path) const;

  bool operator==(const FileFilter&) const = default;
};

struct CheckQuery {
  Pattern pattern;
  FileFilter filter;
  std::optional<std::string> tag;

  bool operator==(const CheckQuery&) const = default;
};

struct MaxQuery {
  std::vector<CheckQuery> checks;
  bool operator==(const MaxQuery&) const = default;
};

struct ListQuery {
  std::vector<CheckQuery> checks;
  bool operator==(const ListQuery&) const = default;
};

struct FqlQuery {
  std::variant<CheckQuery, MaxQuery, ListQuery> node;

  bool operator==(const FqlQuery&) const = default;
};

/// Normalized standard version. Ordering ignores the raw spelling.
struct VersionTag {
  unsigned major = 0;
  unsigned minor = 0;
  std::string raw;

  std::string canonical() const;

  bool operator==(const VersionTag& o) const noexcept {
    return major == o.major && minor == o.minor;
  }
  std::strong_ordering operator<=>(const VersionTag& o) const noexcept {
    if (auto c = major <=> o.major; c != 0) return c;
    return minor <=> o.minor;
  }
};

/// "M.N" -> (M,N); all-digit "MN..." -> (M, N...); "M" -> (M,0).
/// Throws Errc::BadVersionTag for anything else.
VersionTag normalize_version(std::string_view raw);

enum class ParseMode { Strict, Lenient };

/// Strict mode accepts exactly the documented grammar. Lenient mode also
/// recovers a CHECK whose pattern is missing its closing parenthesis (the
/// pattern then ends at the top-level WHERE keyword), a stray ')' directly
/// before a ',' inside MAX/LIST, and `...` elision placeholders between
/// children.
FqlQuery parse_fql(std::string_view text, ParseMode mode = ParseMode::Strict);

/// Parses one query at the start of `text` (after leading whitespace) and
/// reports how many bytes were consumed; trailing text is left alone.
struct PrefixParse {
  FqlQuery query;
  std::size_t consumed = 0;
};
PrefixParse parse_fql_prefix(std::string_view text, ParseMode mode = ParseMode::Lenient);

std::string render_fql(const FqlQuery& query);
std::string render_check(const CheckQuery& check);

struct MatchOptions {
  bool case_sensitive = false;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct Hit {
  std::string file;
  std::size_t line = 0;  // 1-based
  std::string term;
  std::string excerpt;  // trimmed line, at most kExcerptLimit bytes

  bool operator==(const Hit&) const = default;
};

inline constexpr std::size_t kExcerptLimit = 200;

struct CheckReport {
  bool matched = false;
  std::optional<std::string> tag;
  std::vector<Hit> hits;

  bool operator==(const CheckReport&) const = default;
};

struct MaxWinner {
  VersionTag tag;
  std::size_t child = 0;  // index into MaxQuery::checks
  std::vector<Hit> hits;

  bool operator==(const MaxWinner& o) const {
    return tag == o.tag && tag.raw == o.tag.raw && child == o.child && hits == o.hits;
  }
};

struct MaxReport {
  std::optional<MaxWinner> winner;
  std::vector<CheckReport> checks;

  bool operator==(const MaxReport&) const = default;
};

struct ListEntry {
  std::string tag;
  bool matched = false;
  std::size_t hit_count = 0;

  bool operator==(const ListEntry&) const = default;
};

struct ListReport {
  std::vector<ListEntry> entries;
  std::vector<CheckReport> checks;

  bool operator==(const ListReport&) const = default;
};

struct FeatureReport {
  std::variant<CheckReport, MaxReport, ListReport> result;

  bool operator==(const FeatureReport&) const = default;
};

FeatureReport execute(const FqlQuery& query, const corpus::CorpusSnapshot& corpus,
                      const MatchOptions& options = {});

CheckReport execute_check(const CheckQuery& check, const corpus::CorpusSnapshot& corpus,
                          const MatchOptions& options = {});

}  // namespace s3::fql
