#include <algorithm>
#include <cctype>
#include <charconv>
#include <future>
#include <thread>

#include "s3/error.hpp"
#include "s3/fql.hpp"
#include "s3/text.hpp"

namespace s3::fql {

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

unsigned to_uint(std::string_view digits, std::string_view raw) {
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
    throw Error(Errc::BadVersionTag, "version component out of range: '" + std::string(raw) + "'");
  }
  return value;
}

std::vector<Hit> scan_file(const corpus::SourceFile& file, const std::vector<std::string>& terms,
                           const std::vector<std::string>& needles, bool case_sensitive) {
  std::vector<Hit> hits;
  std::string folded;
  for (std::size_t n = 0; n < file.lines.size(); ++n) {
    const std::string& line = file.lines[n];
    std::string_view haystack = line;
    if (!case_sensitive) {
      folded = text::to_lower(line);
      haystack = folded;
    }
    for (std::size_t t = 0; t < needles.size(); ++t) {
      if (haystack.find(needles[t]) == std::string_view::npos) continue;
      hits.push_back(Hit{file.path, n + 1, terms[t],
                         std::string(text::utf8_prefix(text::trim(line), kExcerptLimit))});
    }
  }
  return hits;
}

}  // namespace

std::string VersionTag::canonical() const {
  return std::to_string(major) + "." + std::to_string(minor);
}

VersionTag normalize_version(std::string_view raw_in) {
  const auto raw = text::trim(raw_in);
  if (raw.empty()) throw Error(Errc::BadVersionTag, "empty version tag");
  VersionTag tag;
  tag.raw = std::string(raw);
  const auto dot = raw.find('.');
  if (dot != std::string_view::npos) {
    const auto major = raw.substr(0, dot);
    const auto minor = raw.substr(dot + 1);
    if (!all_digits(major) || !all_digits(minor)) {
      throw Error(Errc::BadVersionTag, "not a version tag: '" + std::string(raw) + "'");
    }
    tag.major = to_uint(major, raw);
    tag.minor = to_uint(minor, raw);
    return tag;
  }
  if (!all_digits(raw)) {
    throw Error(Errc::BadVersionTag, "not a version tag: '" + std::string(raw) + "'");
  }
  tag.major = to_uint(raw.substr(0, 1), raw);
  tag.minor = raw.size() > 1 ? to_uint(raw.substr(1), raw) : 0;
  return tag;
}

bool FileFilter::accepts(std::string_view relative_path) const {
  if (is_wildcard()) return true;
  const auto& globs = std::get<std::vector<std::string>>(spec);
  return std::any_of(globs.begin(), globs.end(),
                     [&](const std::string& g) { return text::glob_match(g, relative_path); });
}

std::string render_check(const CheckQuery& check) {
  std::string out = "CHECK (";
  for (std::size_t i = 0; i < check.pattern.terms.size(); ++i) {
    if (i) out += " || ";
    out += check.pattern.terms[i];
  }
  out += ") WHERE (";
  if (check.filter.is_wildcard()) {
    out += "*";
  } else {
    const auto& globs = std::get<std::vector<std::string>>(check.filter.spec);
    for (std::size_t i = 0; i < globs.size(); ++i) {
      if (i) out += ", ";
      out += globs[i];
    }
  }
  out += ")";
  if (check.tag) out += " AS (" + *check.tag + ")";
  return out;
}

std::string render_fql(const FqlQuery& query) {
  auto children = [](std::string_view kw, const std::vector<CheckQuery>& checks) {
    std::string out(kw);
    out += " (";
    for (std::size_t i = 0; i < checks.size(); ++i) {
      if (i) out += ", ";
      out += render_check(checks[i]);
    }
    out += ")";
    return out;
  };
  return std::visit(
      [&](const auto& node) -> std::string {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, CheckQuery>) {
          return render_check(node);
        } else if constexpr (std::is_same_v<T, MaxQuery>) {
          return children("MAX", node.checks);
        } else {
          return children("LIST", node.checks);
        }
      },
      query.node);
}

CheckReport execute_check(const CheckQuery& check, const corpus::CorpusSnapshot& corpus,
                          const MatchOptions& options) {
  const auto& terms = check.pattern.terms;
  std::vector<std::string> needles;
  needles.reserve(terms.size());
  for (const auto& t : terms) needles.push_back(options.case_sensitive ? t : text::to_lower(t));

  std::vector<const corpus::SourceFile*> files;
  for (const auto& f : corpus.files()) {
    if (check.filter.accepts(f.path)) files.push_back(&f);
  }

  std::vector<std::vector<Hit>> per_file(files.size());
  unsigned workers = options.threads ? options.threads : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, 32);
  if (workers == 1 || files.size() < 2) {
    for (std::size_t i = 0; i < files.size(); ++i) {
      per_file[i] = scan_file(*files[i], terms, needles, options.case_sensitive);
    }
  } else {
    // Each worker owns a strided slice of per_file; order is restored by index.
    std::vector<std::future<void>> tasks;
    for (unsigned w = 0; w < workers; ++w) {
      tasks.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = w; i < files.size(); i += workers) {
          per_file[i] = scan_file(*files[i], terms, needles, options.case_sensitive);
        }
      }));
    }
    for (auto& t : tasks) t.get();
  }

  CheckReport report;
  report.tag = check.tag;
  for (auto& hits : per_file) {
    std::move(hits.begin(), hits.end(), std::back_inserter(report.hits));
  }
  report.matched = !report.hits.empty();
  return report;
}

FeatureReport execute(const FqlQuery& query, const corpus::CorpusSnapshot& corpus,
                      const MatchOptions& options) {
  return std::visit(
      [&](const auto& node) -> FeatureReport {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, CheckQuery>) {
          return {execute_check(node, corpus, options)};
        } else if constexpr (std::is_same_v<T, MaxQuery>) {
          MaxReport report;
          for (std::size_t i = 0; i < node.checks.size(); ++i) {
            auto sub = execute_check(node.checks[i], corpus, options);
            if (sub.matched) {
              auto tag = normalize_version(node.checks[i].tag.value_or(""));
              if (!report.winner || report.winner->tag < tag) {
                report.winner = MaxWinner{std::move(tag), i, sub.hits};
              }
            }
            report.checks.push_back(std::move(sub));
          }
          return {std::move(report)};
        } else {
          ListReport report;
          for (const auto& child : node.checks) {
            auto sub = execute_check(child, corpus, options);
            std::string label = child.tag ? *child.tag : render_check(CheckQuery{child.pattern, child.filter, {}});
            report.entries.push_back(ListEntry{std::move(label), sub.matched, sub.hits.size()});
            report.checks.push_back(std::move(sub));
          }
          return {std::move(report)};
        }
      },
      query.node);
}

}  // namespace s3::fql
