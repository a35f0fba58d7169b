#include <cctype>

#include "s3/error.hpp"
#include "s3/fql.hpp"
#include "s3/text.hpp"

namespace s3::fql {

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

class Parser {
 public:
  Parser(std::string_view text, ParseMode mode) : text_(text), lenient_(mode == ParseMode::Lenient) {}

  PrefixParse parse_prefix() {
    skip_ws();
    FqlQuery q;
    if (at_keyword("CHECK")) {
      q.node = parse_check().check;
    } else if (at_keyword("MAX")) {
      pos_ += 3;
      MaxQuery m;
      for (auto& c : parse_children()) {
        check_version_tag(c);
        m.checks.push_back(std::move(c.check));
      }
      q.node = std::move(m);
    } else if (at_keyword("LIST")) {
      pos_ += 4;
      ListQuery l;
      for (auto& c : parse_children()) l.checks.push_back(std::move(c.check));
      q.node = std::move(l);
    } else {
      fail({"CHECK", "MAX", "LIST"}, "expected a query keyword");
    }
    return {std::move(q), pos_};
  }

  void expect_end() {
    skip_ws();
    if (pos_ != text_.size()) fail({"end of input"}, "unexpected trailing text");
  }

 private:
  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& what) const {
    std::string msg = what + " at offset " + std::to_string(pos_) + " (expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += " | ";
      msg += "'" + expected[i] + "'";
    }
    msg += ")";
    throw SyntaxError(pos_, std::move(expected), msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  bool at(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  bool keyword_at(std::size_t p, std::string_view kw) const {
    if (text_.substr(p, kw.size()) != kw) return false;
    if (p > 0 && is_ident_char(text_[p - 1])) return false;
    const auto after = p + kw.size();
    return after >= text_.size() || !is_ident_char(text_[after]);
  }

  bool at_keyword(std::string_view kw) const { return keyword_at(pos_, kw); }

  void expect(std::string_view token) {
    skip_ws();
    if (!at(token)) fail({std::string(token)}, "expected '" + std::string(token) + "'");
    pos_ += token.size();
  }

  void expect_keyword(std::string_view kw) {
    skip_ws();
    if (!at_keyword(kw)) fail({std::string(kw)}, "expected keyword " + std::string(kw));
    pos_ += kw.size();
  }

  // Lenient recovery point: top-level `WHERE` followed by '('.
  bool recovery_where(std::size_t p) const {
    if (!keyword_at(p, "WHERE")) return false;
    auto q = p + 5;
    while (q < text_.size() && is_space(text_[q])) ++q;
    return q < text_.size() && text_[q] == '(';
  }

  Pattern parse_pattern() {
    Pattern pattern;
    std::size_t depth = 0;
    std::size_t term_start = pos_;
    auto push_term = [&](std::size_t end) {
      const auto term = text::trim(text_.substr(term_start, end - term_start));
      if (term.empty()) {
        throw Error(Errc::EmptyPattern, "empty pattern term at offset " + std::to_string(term_start),
                    term_start);
      }
      pattern.terms.emplace_back(term);
    };
    for (std::size_t i = pos_;; ++i) {
      if (i >= text_.size()) {
        pos_ = text_.size();
        fail({")"}, "unterminated pattern");
      }
      const char c = text_[i];
      if (c == '(') {
        ++depth;
      } else if (c == ')') {
        if (depth == 0) {
          push_term(i);
          pos_ = i + 1;
          return pattern;
        }
        --depth;
      } else if (depth == 0 && c == '|' && i + 1 < text_.size() && text_[i + 1] == '|') {
        push_term(i);
        term_start = i + 2;
        ++i;
      } else if (lenient_ && depth == 0 && recovery_where(i)) {
        push_term(i);
        pos_ = i;
        return pattern;
      }
    }
  }

  FileFilter parse_filespec() {
    expect("(");
    const auto start = pos_;
    const auto close = text_.find(')', pos_);
    if (close == std::string_view::npos) {
      pos_ = text_.size();
      fail({")"}, "unterminated file filter");
    }
    const auto body = text::trim(text_.substr(start, close - start));
    FileFilter filter;
    if (body == "*") {
      filter.spec = Wildcard{};
    } else {
      if (body.empty()) fail({"*", "glob"}, "empty file filter");
      std::vector<std::string> globs;
      for (auto g : text::split(body, ",")) {
        g = text::trim(g);
        if (g.empty()) fail({"glob"}, "empty glob in file filter");
        globs.emplace_back(g);
      }
      filter.spec = std::move(globs);
    }
    pos_ = close + 1;
    return filter;
  }

  std::string parse_tag() {
    expect("(");
    const auto close = text_.find(')', pos_);
    if (close == std::string_view::npos) {
      pos_ = text_.size();
      fail({")"}, "unterminated tag");
    }
    const auto tag = text::trim(text_.substr(pos_, close - pos_));
    if (tag.empty()) fail({"tag"}, "empty tag");
    pos_ = close + 1;
    return std::string(tag);
  }

  struct ParsedCheck {
    CheckQuery check;
    std::size_t tag_offset = 0;
  };

  ParsedCheck parse_check() {
    expect_keyword("CHECK");
    expect("(");
    CheckQuery check;
    check.pattern = parse_pattern();
    expect_keyword("WHERE");
    check.filter = parse_filespec();
    skip_ws();
    const auto tag_offset = pos_;
    if (at_keyword("AS")) {
      pos_ += 2;
      check.tag = parse_tag();
    }
    return {std::move(check), tag_offset};
  }

  std::vector<ParsedCheck> parse_children() {
    expect("(");
    std::vector<ParsedCheck> children;
    while (true) {
      skip_ws();
      if (lenient_ && at("...")) {
        pos_ += 3;
        skip_ws();
        if (at(",")) {
          ++pos_;
          continue;
        }
        if (at(")")) {
          ++pos_;
          break;
        }
        fail({",", ")"}, "expected separator after elision");
      }
      children.push_back(parse_check());
      skip_ws();
      while (lenient_ && at(")")) {
        auto q = pos_ + 1;
        while (q < text_.size() && is_space(text_[q])) ++q;
        if (q < text_.size() && text_[q] == ',') {
          pos_ = q;
        } else {
          break;
        }
      }
      if (at(",")) {
        ++pos_;
        continue;
      }
      if (at(")")) {
        ++pos_;
        break;
      }
      fail({",", ")"}, "expected ',' or ')' after CHECK");
    }
    if (children.empty()) fail({"CHECK"}, "empty query list");
    return children;
  }

  static void check_version_tag(const ParsedCheck& parsed) {
    const auto& c = parsed.check;
    const auto offset = parsed.tag_offset;
    if (!c.tag) {
      throw Error(Errc::BadVersionTag,
                  "MAX child without a version tag at offset " + std::to_string(offset), offset);
    }
    try {
      (void)normalize_version(*c.tag);
    } catch (const Error& e) {
      throw Error(Errc::BadVersionTag, std::string(e.what()) + " at offset " + std::to_string(offset),
                  offset);
    }
  }

  std::string_view text_;
  bool lenient_;
  std::size_t pos_ = 0;
};

}  // namespace

PrefixParse parse_fql_prefix(std::string_view text, ParseMode mode) {
  if (mode == ParseMode::Lenient) {
    try {
      return Parser(text, ParseMode::Strict).parse_prefix();
    } catch (const SyntaxError&) {
    } catch (const Error& e) {
      if (e.code() != Errc::EmptyPattern) throw;
    }
  }
  return Parser(text, mode).parse_prefix();
}

FqlQuery parse_fql(std::string_view text, ParseMode mode) {
  if (text::trim(text).empty()) throw SyntaxError(0, {"CHECK", "MAX", "LIST"}, "empty query");
  auto attempt = [&](ParseMode m) {
    Parser p(text, m);
    auto result = p.parse_prefix();
    p.expect_end();
    return std::move(result.query);
  };
  if (mode == ParseMode::Lenient) {
    try {
      return attempt(ParseMode::Strict);
    } catch (const SyntaxError&) {
    } catch (const Error& e) {
      if (e.code() != Errc::EmptyPattern) throw;
    }
  }
  return attempt(mode);
}

}  // namespace s3::fql
