#include "s3/corpus.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <fstream>
#include <future>
#include <iterator>
#include <thread>
#include <variant>

#include "s3/error.hpp"
#include "s3/text.hpp"

namespace fs = std::filesystem;

namespace s3::corpus {

namespace {

struct ExtensionEntry {
  std::string_view key;
  Language language;
};

// Keys are lowercased extensions (without the dot) or exact file names.
constexpr std::array kExtensions{
    ExtensionEntry{"f", Language::Fortran},     ExtensionEntry{"for", Language::Fortran},
    ExtensionEntry{"ftn", Language::Fortran},   ExtensionEntry{"f77", Language::Fortran},
    ExtensionEntry{"f90", Language::Fortran},   ExtensionEntry{"f95", Language::Fortran},
    ExtensionEntry{"f03", Language::Fortran},   ExtensionEntry{"f08", Language::Fortran},
    ExtensionEntry{"fpp", Language::Fortran},   ExtensionEntry{"inc", Language::Fortran},
    ExtensionEntry{"c", Language::C},           ExtensionEntry{"h", Language::C},
    ExtensionEntry{"cc", Language::Cpp},        ExtensionEntry{"cpp", Language::Cpp},
    ExtensionEntry{"cxx", Language::Cpp},       ExtensionEntry{"c++", Language::Cpp},
    ExtensionEntry{"hpp", Language::Cpp},       ExtensionEntry{"hh", Language::Cpp},
    ExtensionEntry{"hxx", Language::Cpp},       ExtensionEntry{"cu", Language::Cpp},
    ExtensionEntry{"py", Language::Python},     ExtensionEntry{"sh", Language::Shell},
    ExtensionEntry{"bash", Language::Shell},    ExtensionEntry{"csh", Language::Shell},
    ExtensionEntry{"ksh", Language::Shell},     ExtensionEntry{"zsh", Language::Shell},
    ExtensionEntry{"mk", Language::Make},       ExtensionEntry{"cmake", Language::CMake},
};

constexpr std::array kFileNames{
    ExtensionEntry{"Makefile", Language::Make},
    ExtensionEntry{"makefile", Language::Make},
    ExtensionEntry{"GNUmakefile", Language::Make},
    ExtensionEntry{"CMakeLists.txt", Language::CMake},
};

constexpr std::size_t kSniffBytes = 8192;

struct Candidate {
  fs::path absolute;
  std::string relative;
};

struct ReadOutcome {
  std::variant<SourceFile, Exclusion> result;
};

std::string relative_string(const fs::path& p, const fs::path& root) {
  return p.lexically_relative(root).generic_string();
}

bool is_hidden(const std::string& name) { return name.size() > 1 && name[0] == '.'; }

bool rule_excludes(const ExclusionRules& rules, const std::string& rel) {
  return std::any_of(rules.globs.begin(), rules.globs.end(),
                     [&](const std::string& g) { return text::glob_match(g, rel); });
}

ReadOutcome read_candidate(const Candidate& c) {
  std::ifstream in(c.absolute, std::ios::binary);
  if (!in) {
    const bool denied = errno == EACCES || errno == EPERM;
    return {Exclusion{c.relative, denied ? "permission" : "unreadable"}};
  }
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) return {Exclusion{c.relative, "unreadable"}};
  const auto sniff = std::string_view(bytes).substr(0, kSniffBytes);
  if (sniff.find('\0') != std::string_view::npos) return {Exclusion{c.relative, "binary"}};

  SourceFile f;
  f.path = c.relative;
  f.language = classify(c.relative);
  f.lines = text::split_lines(text::utf8_sanitize(bytes));
  f.line_count = f.lines.size();
  return {std::move(f)};
}

void walk(const fs::path& dir, const fs::path& root, const ExclusionRules& rules,
          std::vector<Candidate>& candidates, std::vector<Exclusion>& excluded) {
  std::error_code ec;
  fs::directory_iterator it(dir, fs::directory_options::none, ec);
  if (ec) {
    const auto rel = relative_string(dir, root) + "/";
    excluded.push_back({rel, ec == std::errc::permission_denied ? "permission" : "unreadable"});
    return;
  }
  std::vector<fs::directory_entry> entries;
  for (; it != fs::directory_iterator(); it.increment(ec)) {
    if (ec) break;
    entries.push_back(*it);
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.path() < b.path(); });

  for (const auto& entry : entries) {
    const auto rel = relative_string(entry.path(), root);
    const auto name = entry.path().filename().string();
    std::error_code sec;
    const auto status = entry.symlink_status(sec);
    if (sec) {
      excluded.push_back({rel, "unreadable"});
      continue;
    }
    if (fs::is_symlink(status)) {
      excluded.push_back({rel, "symlink"});
      continue;
    }
    if (fs::is_directory(status)) {
      if (rules.skip_hidden_dirs && is_hidden(name)) {
        excluded.push_back({rel + "/", "hidden"});
      } else if (rules.skip_build_dirs && name.rfind("build", 0) == 0) {
        excluded.push_back({rel + "/", "build"});
      } else if (rule_excludes(rules, rel)) {
        excluded.push_back({rel + "/", "rule"});
      } else {
        walk(entry.path(), root, rules, candidates, excluded);
      }
      continue;
    }
    if (!fs::is_regular_file(status)) {
      excluded.push_back({rel, "special"});
      continue;
    }
    if (rule_excludes(rules, rel)) {
      excluded.push_back({rel, "rule"});
      continue;
    }
    const auto size = entry.file_size(sec);
    if (sec) {
      excluded.push_back({rel, "unreadable"});
      continue;
    }
    if (size > rules.max_file_size) {
      excluded.push_back({rel, "size"});
      continue;
    }
    candidates.push_back({entry.path(), rel});
  }
}

}  // namespace

std::string_view language_name(Language lang) noexcept {
  switch (lang) {
    case Language::Fortran: return "Fortran";
    case Language::C: return "C";
    case Language::Cpp: return "C++";
    case Language::Python: return "Python";
    case Language::Shell: return "Shell";
    case Language::Make: return "Make";
    case Language::CMake: return "CMake";
    case Language::Other: return "Other";
  }
  return "Other";
}

std::optional<Language> language_from_name(std::string_view name) noexcept {
  for (auto lang : {Language::Fortran, Language::C, Language::Cpp, Language::Python,
                    Language::Shell, Language::Make, Language::CMake, Language::Other}) {
    if (language_name(lang) == name) return lang;
  }
  return std::nullopt;
}

Language classify(std::string_view relative_path) {
  const auto slash = relative_path.rfind('/');
  const auto name = slash == std::string_view::npos ? relative_path : relative_path.substr(slash + 1);
  for (const auto& e : kFileNames) {
    if (e.key == name) return e.language;
  }
  const auto dot = name.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return Language::Other;
  const auto ext = text::to_lower(name.substr(dot + 1));
  for (const auto& e : kExtensions) {
    if (e.key == ext) return e.language;
  }
  return Language::Other;
}

CorpusSnapshot::CorpusSnapshot(fs::path root, std::vector<SourceFile> files,
                               std::vector<Exclusion> excluded)
    : root_(std::move(root)), files_(std::move(files)), excluded_(std::move(excluded)) {
  std::sort(files_.begin(), files_.end(),
            [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
  std::sort(excluded_.begin(), excluded_.end(),
            [](const Exclusion& a, const Exclusion& b) { return a.path < b.path; });
  stats_ = corpus::stats(*this);
}

CorpusSnapshot make_snapshot(fs::path root, std::vector<SourceFile> files) {
  for (auto& f : files) f.line_count = f.lines.size();
  return CorpusSnapshot(std::move(root), std::move(files), {});
}

CorpusSnapshot scan_tree(const fs::path& root, const ExclusionRules& rules) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(Errc::RootNotFound, "corpus root not found: " + root.string());
  }
  const auto abs_root = fs::weakly_canonical(fs::absolute(root));

  std::vector<Candidate> candidates;
  std::vector<Exclusion> excluded;
  walk(abs_root, abs_root, rules, candidates, excluded);

  std::vector<ReadOutcome> outcomes(candidates.size());
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  const std::size_t per = (candidates.size() + workers - 1) / std::max<std::size_t>(workers, 1);
  std::vector<std::future<void>> tasks;
  for (std::size_t begin = 0; begin < candidates.size(); begin += per) {
    const auto end = std::min(candidates.size(), begin + per);
    tasks.push_back(std::async(std::launch::async, [&, begin, end] {
      for (auto i = begin; i < end; ++i) outcomes[i] = read_candidate(candidates[i]);
    }));
  }
  for (auto& t : tasks) t.get();

  std::vector<SourceFile> files;
  for (auto& o : outcomes) {
    if (auto* f = std::get_if<SourceFile>(&o.result)) {
      files.push_back(std::move(*f));
    } else {
      excluded.push_back(std::get<Exclusion>(std::move(o.result)));
    }
  }
  return CorpusSnapshot(abs_root, std::move(files), std::move(excluded));
}

LanguageStats stats(const CorpusSnapshot& snapshot) {
  LanguageStats s;
  for (const auto& f : snapshot.files()) {
    auto& t = s.per_language[f.language];
    ++t.files;
    t.lines += f.line_count;
    ++s.total.files;
    s.total.lines += f.line_count;
  }
  return s;
}

}  // namespace s3::corpus
