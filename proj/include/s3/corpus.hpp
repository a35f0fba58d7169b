#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace s3::corpus {

enum class Language { Fortran, C, Cpp, Python, Shell, Make, CMake, Other };

std::string_view language_name(Language lang) noexcept;
std::optional<Language> language_from_name(std::string_view name) noexcept;

/// Version of the built-in extension table; bump when the mapping changes.
inline constexpr int kLanguageMapVersion = 1;

/// Language for a corpus-relative path. Files without a known extension or
/// well-known file name map to Other.
Language classify(std::string_view relative_path);

struct SourceFile {
  std::string path;  // corpus-relative, '/'-separated
  Language language = Language::Other;
  std::vector<std::string> lines;
  std::size_t line_count = 0;

  bool operator==(const SourceFile&) const = default;
};

struct Exclusion {
  std::string path;  // directories carry a trailing '/'
  std::string reason;

  bool operator==(const Exclusion&) const = default;
};

struct LanguageTotals {
  std::size_t files = 0;
  std::size_t lines = 0;

  bool operator==(const LanguageTotals&) const = default;
};

struct LanguageStats {
  std::map<Language, LanguageTotals> per_language;  // only languages with files
  LanguageTotals total;

  bool operator==(const LanguageStats&) const = default;
};

struct ExclusionRules {
  std::vector<std::string> globs;
  std::uintmax_t max_file_size = 4u * 1024u * 1024u;
  bool skip_hidden_dirs = true;
  bool skip_build_dirs = true;  // directories whose name starts with "build"
};

/// Immutable result of walking a source tree.
class CorpusSnapshot {
 public:
  CorpusSnapshot() = default;
  CorpusSnapshot(std::filesystem::path root, std::vector<SourceFile> files,
                 std::vector<Exclusion> excluded);

  const std::filesystem::path& root() const noexcept { return root_; }
  const std::vector<SourceFile>& files() const noexcept { return files_; }
  const std::vector<Exclusion>& excluded() const noexcept { return excluded_; }
  const LanguageStats& stats() const noexcept { return stats_; }
  bool empty() const noexcept { return files_.empty(); }

  bool operator==(const CorpusSnapshot&) const = default;

 private:
  std::filesystem::path root_;
  std::vector<SourceFile> files_;
  std::vector<Exclusion> excluded_;
  LanguageStats stats_;
};

/// Builds a snapshot from files already in memory; files are sorted by path.
CorpusSnapshot make_snapshot(std::filesystem::path root, std::vector<SourceFile> files);

/// Walks `root` without following symlinks. Throws Errc::RootNotFound when
/// root is missing or not a directory; per-file failures become exclusions.
CorpusSnapshot scan_tree(const std::filesystem::path& root, const ExclusionRules& rules = {});

LanguageStats stats(const CorpusSnapshot& snapshot);

}  // namespace s3::corpus
