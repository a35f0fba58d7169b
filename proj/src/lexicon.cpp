#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "s3/embedded_data.hpp"
#include "s3/error.hpp"
#include "s3/llm.hpp"
#include "s3/text.hpp"

namespace s3::llm {

namespace {

[[noreturn]] void format_error(const std::string& what, std::size_t line) {
  throw Error(Errc::LexiconFormat, "lexicon line " + std::to_string(line) + ": " + what, line);
}

void finish_entry(LexiconEntry& e, std::size_t line) {
  if (e.keywords.empty()) format_error("entry '" + e.term + "' has no keywords", line);
  if (e.category == Category::Enumeration && e.labels.size() != e.keywords.size()) {
    format_error("enumeration entry '" + e.term + "' needs a label for every keyword", line);
  }
  if (e.category == Category::Version && !e.version_tag) {
    throw Error(Errc::BadVersionTag, "version entry '" + e.term + "' has no version", line);
  }
  if (e.version_tag) {
    try {
      (void)fql::normalize_version(*e.version_tag);
    } catch (const Error& err) {
      throw Error(Errc::BadVersionTag, "entry '" + e.term + "': " + err.what(), line);
    }
  }
  for (const auto& k : e.keywords) {
    try {
      fql::CheckQuery c{{{k}}, {fql::Wildcard{}}, {}};
      if (fql::parse_fql(fql::render_check(c)) != fql::FqlQuery{c}) throw Error(Errc::EmptyPattern, "");
    } catch (const Error&) {
      format_error("keyword '" + k + "' is not a valid FQL term", line);
    }
  }
  const auto term_alias = text::to_lower(e.term);
  if (std::find(e.aliases.begin(), e.aliases.end(), term_alias) == e.aliases.end()) {
    e.aliases.push_back(term_alias);
  }
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

// Case-insensitive whole-phrase search.
bool contains_phrase(const std::string& haystack_lower, const std::string& phrase_lower) {
  std::size_t pos = 0;
  while ((pos = haystack_lower.find(phrase_lower, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !word_char(haystack_lower[pos - 1]);
    const auto end = pos + phrase_lower.size();
    const bool right_ok = end >= haystack_lower.size() || !word_char(haystack_lower[end]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

bool asks_for_version(const std::string& question_lower) {
  for (const char* cue : {"version", "minimum", "standard", "require"}) {
    if (question_lower.find(cue) != std::string::npos) return true;
  }
  return false;
}

fql::CheckQuery check_of(std::vector<std::string> keywords, std::string tag) {
  return fql::CheckQuery{{std::move(keywords)}, {fql::Wildcard{}}, std::move(tag)};
}

std::vector<const LexiconEntry*> family_members(const LexiconEntry& entry, const Lexicon& lexicon) {
  std::vector<const LexiconEntry*> members;
  for (const auto& e : lexicon) {
    if (e.category == Category::Version && e.family && e.family == entry.family) members.push_back(&e);
  }
  if (members.empty()) members.push_back(&entry);
  std::stable_sort(members.begin(), members.end(), [](const LexiconEntry* a, const LexiconEntry* b) {
    return fql::normalize_version(*b->version_tag) < fql::normalize_version(*a->version_tag);
  });
  return members;
}

fql::FqlQuery max_query(const LexiconEntry& entry, const Lexicon& lexicon) {
  fql::MaxQuery m;
  for (const auto* e : family_members(entry, lexicon)) {
    m.checks.push_back(check_of(e->keywords, fql::normalize_version(*e->version_tag).canonical()));
  }
  return {std::move(m)};
}

fql::FqlQuery list_query(const LexiconEntry& entry) {
  fql::ListQuery l;
  for (std::size_t i = 0; i < entry.keywords.size(); ++i) {
    l.checks.push_back(check_of({entry.keywords[i]}, entry.labels[i]));
  }
  return {std::move(l)};
}

fql::FqlQuery presence_query(const LexiconEntry& entry) {
  return {check_of(entry.keywords, entry.family.value_or(entry.term))};
}

}  // namespace

std::string_view category_name(Category c) noexcept {
  switch (c) {
    case Category::Library: return "library";
    case Category::Version: return "version";
    case Category::Enumeration: return "enumeration";
  }
  return "library";
}

Lexicon parse_lexicon(std::string_view text) {
  Lexicon lexicon;
  std::set<std::string> terms;
  std::optional<LexiconEntry> cur;
  std::size_t cur_line = 0;
  const auto lines = text::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line_no = i + 1;
    const auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') format_error("unterminated section header", line_no);
      if (cur) {
        finish_entry(*cur, cur_line);
        lexicon.push_back(std::move(*cur));
      }
      cur.emplace();
      cur->term = std::string(text::trim(line.substr(1, line.size() - 2)));
      cur_line = line_no;
      if (cur->term.empty()) format_error("empty term", line_no);
      if (!terms.insert(text::to_lower(cur->term)).second) {
        throw Error(Errc::DuplicateTerm, "duplicate lexicon term '" + cur->term + "'", line_no);
      }
      continue;
    }
    if (!cur) format_error("key outside of a [term] section", line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) format_error("expected 'key = value'", line_no);
    const auto key = text::trim(line.substr(0, eq));
    const auto value = text::trim(line.substr(eq + 1));
    if (key == "category") {
      if (value == "library") {
        cur->category = Category::Library;
      } else if (value == "version") {
        cur->category = Category::Version;
      } else if (value == "enumeration") {
        cur->category = Category::Enumeration;
      } else {
        format_error("unknown category '" + std::string(value) + "'", line_no);
      }
    } else if (key == "aliases") {
      for (auto a : text::split(value, ",")) {
        a = text::trim(a);
        if (!a.empty()) cur->aliases.push_back(text::to_lower(a));
      }
    } else if (key == "keywords") {
      for (auto k : text::split(value, "||")) {
        k = text::trim(k);
        if (k.empty()) format_error("empty keyword", line_no);
        if (const auto arrow = k.find("=>"); arrow != std::string_view::npos) {
          cur->keywords.emplace_back(text::trim(k.substr(0, arrow)));
          cur->labels.emplace_back(text::trim(k.substr(arrow + 2)));
          if (cur->keywords.back().empty() || cur->labels.back().empty()) {
            format_error("empty keyword or label", line_no);
          }
        } else {
          cur->keywords.emplace_back(k);
        }
      }
    } else if (key == "version") {
      cur->version_tag = std::string(value);
    } else if (key == "family") {
      cur->family = std::string(value);
    } else {
      format_error("unknown key '" + std::string(key) + "'", line_no);
    }
  }
  if (cur) {
    finish_entry(*cur, cur_line);
    lexicon.push_back(std::move(*cur));
  }
  return lexicon;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open lexicon: " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_lexicon(content);
}

Lexicon builtin_lexicon() { return parse_lexicon(data::files().at("lexicon.s3lex")); }

std::string builtin_handbook() { return std::string(data::files().at("fql_handbook.md")); }

fql::FqlQuery fallback_query(std::string_view question, const Lexicon& lexicon) {
  const auto q = text::to_lower(question);
  const LexiconEntry* best = nullptr;
  std::size_t best_len = 0;
  for (const auto& e : lexicon) {
    for (const auto& alias : e.aliases) {
      if (alias.size() > best_len && contains_phrase(q, alias)) {
        best = &e;
        best_len = alias.size();
      }
    }
  }
  if (!best) {
    throw Error(Errc::NoLexiconMatch, "no lexicon term matches the question: " + std::string(question));
  }
  switch (best->category) {
    case Category::Library:
      return presence_query(*best);
    case Category::Version:
      return asks_for_version(q) ? max_query(*best, lexicon) : presence_query(*best);
    case Category::Enumeration:
      return list_query(*best);
  }
  return presence_query(*best);
}

std::string render_lexicon_example(const LexiconEntry& entry, const Lexicon& lexicon) {
  std::string out;
  switch (entry.category) {
    case Category::Library:
      out = "Question: Is " + entry.term + " used?\nFQL: " + fql::render_fql(presence_query(entry));
      break;
    case Category::Version: {
      const auto family = entry.family.value_or(entry.term);
      out = entry.term + " features: ";
      for (std::size_t i = 0; i < entry.keywords.size(); ++i) out += (i ? ", " : "") + entry.keywords[i];
      out += "\nQuestion: What is the minimum version of " + family + " required?\nFQL: " +
             fql::render_fql(max_query(entry, lexicon));
      break;
    }
    case Category::Enumeration:
      out = "Question: Which " + entry.term + " is used?\nFQL: " + fql::render_fql(list_query(entry));
      break;
  }
  return out;
}

ragdoc::ChunkIndex build_example_index(const ragdoc::Embedder& embedder, const Lexicon& lexicon,
                                       std::string_view handbook) {
  ragdoc::ChunkIndex index(embedder.id(), embedder.dim());
  if (!text::trim(handbook).empty()) index.add_document(embedder, "fql-handbook", handbook, {600, 0});
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    const auto example = render_lexicon_example(lexicon[i], lexicon);
    ragdoc::Chunk c{"lexicon", i, example, 0, example.size()};
    index.append(std::move(c), embedder.embed(example));
  }
  return index;
}

}  // namespace s3::llm
