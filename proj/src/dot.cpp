#include <algorithm>
#include <cctype>

#include "s3/error.hpp"
#include "s3/metadata.hpp"
#include "s3/text.hpp"

namespace s3::metadata {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Blanks out comments while keeping offsets and newlines intact.
std::string strip_comments(std::string_view in) {
  std::string out(in);
  bool in_quote = false;
  bool line_start = true;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const char c = out[i];
    if (in_quote) {
      if (c == '\\' && i + 1 < out.size()) {
        ++i;
      } else if (c == '"') {
        in_quote = false;
      }
      continue;
    }
    if (c == '"') {
      in_quote = true;
      line_start = false;
    } else if (c == '/' && i + 1 < out.size() && out[i + 1] == '/') {
      while (i < out.size() && out[i] != '\n') out[i++] = ' ';
      line_start = true;
    } else if (c == '/' && i + 1 < out.size() && out[i + 1] == '*') {
      while (i < out.size() && !(out[i] == '*' && i + 1 < out.size() && out[i + 1] == '/')) {
        if (out[i] != '\n') out[i] = ' ';
        ++i;
      }
      if (i < out.size()) out[i] = ' ';
      if (i + 1 < out.size()) out[++i] = ' ';
    } else if (c == '#' && line_start) {
      while (i < out.size() && out[i] != '\n') out[i++] = ' ';
      line_start = true;
    } else if (c == '\n') {
      line_start = true;
    } else if (!is_space(c)) {
      line_start = false;
    }
  }
  return out;
}

std::size_t line_of(std::string_view text, std::size_t offset) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

std::string unquote(std::string_view token) {
  if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
    return text::replace_all(std::string(token.substr(1, token.size() - 2)), "\\\"", "\"");
  }
  return std::string(token);
}

bool starts_with_word(std::string_view s, std::string_view word) {
  if (s.substr(0, word.size()) != word) return false;
  return s.size() == word.size() ||
         !(std::isalnum(static_cast<unsigned char>(s[word.size()])) || s[word.size()] == '_');
}

// Finds `needle` outside double quotes.
std::size_t find_unquoted(std::string_view s, std::string_view needle, std::size_t from = 0) {
  bool in_quote = false;
  for (std::size_t i = from; i < s.size(); ++i) {
    if (in_quote) {
      if (s[i] == '\\') {
        ++i;
      } else if (s[i] == '"') {
        in_quote = false;
      }
      continue;
    }
    if (s[i] == '"') {
      in_quote = true;
      continue;
    }
    if (s.substr(i, needle.size()) == needle) return i;
  }
  return std::string_view::npos;
}

[[noreturn]] void unsupported(std::string_view construct, std::size_t line) {
  throw Error(Errc::UnsupportedDot,
              "unsupported DOT construct (" + std::string(construct) + ") on line " +
                  std::to_string(line),
              line);
}

[[noreturn]] void malformed(std::string_view why, std::size_t line) {
  throw Error(Errc::MalformedEdge,
              "malformed edge on line " + std::to_string(line) + ": " + std::string(why), line);
}

QualifiedName endpoint(std::string_view token, std::size_t line) {
  token = text::trim(token);
  if (token.empty()) malformed("missing endpoint", line);
  if (token.front() == '"') {
    if (token.size() < 2 || token.back() != '"') malformed("unterminated quoted name", line);
    return QualifiedName::parse(unquote(token));
  }
  for (char c : token) {
    if (is_space(c) || c == '[' || c == ']' || c == '{' || c == '}' || c == '"' || c == ',') {
      malformed("unexpected character in name '" + std::string(token) + "'", line);
    }
  }
  // ':' is allowed only as part of "::"; a lone ':' is a DOT port.
  for (std::size_t i = 0; i < token.size(); ++i) {
    if (token[i] != ':') continue;
    if (i + 1 < token.size() && token[i + 1] == ':') {
      ++i;
      continue;
    }
    unsupported("port", line);
  }
  return QualifiedName::parse(token);
}

void parse_statement(std::string_view stmt, std::size_t line, CallGraph& g) {
  stmt = text::trim(stmt);
  if (stmt.empty()) return;
  if (stmt.front() == '{' || starts_with_word(stmt, "subgraph")) unsupported("subgraph", line);
  for (auto kw : {"node", "edge", "graph"}) {
    if (starts_with_word(stmt, kw)) unsupported(std::string(kw) + " attribute statement", line);
  }
  // Trailing attribute list on an edge or node statement.
  if (const auto open = find_unquoted(stmt, "["); open != std::string_view::npos) {
    const auto close = find_unquoted(stmt, "]", open);
    if (close == std::string_view::npos) malformed("unterminated attribute list", line);
    if (!text::trim(stmt.substr(close + 1)).empty()) malformed("text after attribute list", line);
    stmt = text::trim(stmt.substr(0, open));
    if (stmt.empty()) malformed("attribute list without a statement", line);
  }
  if (find_unquoted(stmt, "=") != std::string_view::npos) unsupported("graph attribute", line);
  if (find_unquoted(stmt, "--") != std::string_view::npos) unsupported("undirected edge", line);

  std::vector<QualifiedName> chain;
  std::size_t pos = 0;
  while (true) {
    const auto arrow = find_unquoted(stmt, "->", pos);
    chain.push_back(endpoint(stmt.substr(pos, arrow == std::string_view::npos ? std::string_view::npos
                                                                               : arrow - pos),
                             line));
    if (arrow == std::string_view::npos) break;
    pos = arrow + 2;
  }
  for (const auto& n : chain) g.nodes.insert(n);
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) g.edges.push_back({chain[i], chain[i + 1]});
}

const QualifiedName& require_node(const CallGraph& graph, std::string_view function) {
  const auto name = QualifiedName::parse(text::trim(function));
  const auto it = graph.nodes.find(name);
  if (it == graph.nodes.end()) {
    throw Error(Errc::UnknownFunction, "unknown function: " + std::string(function));
  }
  return *it;
}

}  // namespace

QualifiedName QualifiedName::parse(std::string_view token) {
  QualifiedName q;
  q.raw = std::string(token);
  const auto sep = token.find("::");
  if (sep == std::string_view::npos) {
    q.module = q.raw;
    q.function = q.raw;
  } else {
    q.module = std::string(token.substr(0, sep));
    q.function = std::string(token.substr(sep + 2));
  }
  return q;
}

CallGraph parse_dot(std::string_view input) {
  const auto text = strip_comments(input);
  std::string_view s = text;
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < s.size() && is_space(s[pos])) ++pos;
  };
  skip_ws();
  if (starts_with_word(s.substr(pos), "strict")) unsupported("strict graph", line_of(s, pos));
  if (starts_with_word(s.substr(pos), "graph")) {
    throw Error(Errc::NotADigraph, "undirected graph; expected 'digraph'", line_of(s, pos));
  }
  if (!starts_with_word(s.substr(pos), "digraph")) {
    throw Error(Errc::NotADigraph, "expected 'digraph'", line_of(s, pos));
  }
  pos += 7;
  skip_ws();

  CallGraph g;
  const auto brace = find_unquoted(s, "{", pos);
  if (brace == std::string_view::npos) throw Error(Errc::NotADigraph, "missing '{'", line_of(s, pos));
  g.name = unquote(text::trim(s.substr(pos, brace - pos)));

  const auto close = find_unquoted(s, "}", brace + 1);
  if (close == std::string_view::npos) {
    throw Error(Errc::NotADigraph, "missing closing '}'", line_of(s, s.size()));
  }
  if (const auto nested = find_unquoted(s.substr(0, close), "{", brace + 1);
      nested != std::string_view::npos) {
    unsupported("subgraph", line_of(s, nested));
  }
  const auto rest = text::trim(s.substr(close + 1));
  if (!rest.empty()) {
    throw Error(Errc::NotADigraph, "text after the digraph block (only one graph is supported)",
                line_of(s, close + 1));
  }

  // Statements end at newlines or ';'.
  std::size_t stmt_start = brace + 1;
  for (std::size_t i = brace + 1; i <= close; ++i) {
    if (i == close || s[i] == '\n' || s[i] == ';') {
      parse_statement(s.substr(stmt_start, i - stmt_start), line_of(s, stmt_start), g);
      stmt_start = i + 1;
    } else if (s[i] == '"') {
      ++i;
      while (i < close && s[i] != '"') {
        if (s[i] == '\\') ++i;
        ++i;
      }
    }
  }
  return g;
}

std::string render_dot(const CallGraph& graph) {
  std::string out;
  for (const auto& e : graph.edges) out += e.caller.raw + " -> " + e.callee.raw + "\n";
  return out;
}

std::vector<std::string> unique_modules(const CallGraph& graph) {
  std::set<std::string> mods;
  for (const auto& e : graph.edges) {
    mods.insert(e.caller.module);
    mods.insert(e.callee.module);
  }
  for (const auto& n : graph.nodes) mods.insert(n.module);
  return {mods.begin(), mods.end()};
}

std::vector<QualifiedName> callees(const CallGraph& graph, std::string_view function) {
  const auto& node = require_node(graph, function);
  std::vector<QualifiedName> out;
  for (const auto& e : graph.edges) {
    if (e.caller == node && std::find(out.begin(), out.end(), e.callee) == out.end()) {
      out.push_back(e.callee);
    }
  }
  return out;
}

std::vector<QualifiedName> callers(const CallGraph& graph, std::string_view function) {
  const auto& node = require_node(graph, function);
  std::vector<QualifiedName> out;
  for (const auto& e : graph.edges) {
    if (e.callee == node && std::find(out.begin(), out.end(), e.caller) == out.end()) {
      out.push_back(e.caller);
    }
  }
  return out;
}

}  // namespace s3::metadata
