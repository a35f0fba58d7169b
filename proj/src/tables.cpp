#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "s3/error.hpp"
#include "s3/metadata.hpp"
#include "s3/text.hpp"

namespace s3::metadata {

namespace {

bool plain_identifier(std::string_view s) {
  static const std::set<std::string> reserved{
      "ADD",   "ALL",    "ALTER",   "AND",   "AS",     "BY",     "CREATE", "DELETE",
      "DROP",  "FROM",   "GROUP",   "INDEX", "INSERT", "INTO",   "JOIN",   "KEY",
      "LIMIT", "NOT",    "NULL",    "ON",    "OR",     "ORDER",  "PRIMARY", "SELECT",
      "SET",   "TABLE",  "UNION",   "UPDATE", "VALUES", "VIEW",  "WHERE",  "INNER"};
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  std::string upper(s);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return reserved.count(upper) == 0;
}

std::string ident(std::string_view s) {
  if (plain_identifier(s)) return std::string(s);
  return "\"" + text::replace_all(std::string(s), "\"", "\"\"") + "\"";
}

std::string literal(std::string_view s) {
  return "'" + text::replace_all(std::string(s), "'", "''") + "'";
}

// A column of the joined view: which side it comes from and where.
struct Slot {
  int side = 0;  // 0 = left, 1 = right
  std::size_t index = 0;
};

struct Bound {
  const Table* left = nullptr;
  const Table* right = nullptr;
  std::optional<Slot> join_left;
  std::optional<Slot> join_right;
};

Slot resolve(const Bound& b, const ColumnRef& ref) {
  auto in = [&](const Table* t, int side) -> std::optional<Slot> {
    if (!t) return std::nullopt;
    if (auto idx = t->column_index(ref.column)) return Slot{side, *idx};
    return std::nullopt;
  };
  if (ref.table) {
    const Table* t = nullptr;
    int side = 0;
    if (text::iequals(*ref.table, b.left->name)) {
      t = b.left;
    } else if (b.right && text::iequals(*ref.table, b.right->name)) {
      t = b.right;
      side = 1;
    } else {
      throw Error(Errc::UnknownTable, "table not in query: " + *ref.table);
    }
    if (auto s = in(t, side)) return *s;
    throw Error(Errc::UnknownColumn, "unknown column: " + ref.str());
  }
  if (auto s = in(b.left, 0)) return *s;
  if (auto s = in(b.right, 1)) return *s;
  throw Error(Errc::UnknownColumn, "unknown column: " + ref.column);
}

Bound bind(const TableCatalog& catalog, const QueryPlan& plan) {
  Bound b;
  b.left = &find_table(catalog, plan.from);
  if (plan.join) {
    b.right = &find_table(catalog, plan.join->table);
    auto l = resolve(b, plan.join->left);
    auto r = resolve(b, plan.join->right);
    if (l.side == r.side) {
      throw Error(Errc::UnknownColumn, "join condition must compare the two tables");
    }
    if (l.side == 1) std::swap(l, r);
    b.join_left = l;
    b.join_right = r;
  }
  return b;
}

std::vector<std::pair<Slot, std::string>> projection(const Bound& b, const QueryPlan& plan) {
  std::vector<std::pair<Slot, std::string>> out;
  if (!plan.select.empty()) {
    for (const auto& ref : plan.select) {
      const auto slot = resolve(b, ref);
      const Table* t = slot.side == 0 ? b.left : b.right;
      out.emplace_back(slot, t->columns[slot.index]);
    }
    return out;
  }
  for (std::size_t i = 0; i < b.left->columns.size(); ++i) out.emplace_back(Slot{0, i}, b.left->columns[i]);
  if (b.right) {
    for (std::size_t i = 0; i < b.right->columns.size(); ++i) {
      if (b.join_right && b.join_right->index == i) continue;
      out.emplace_back(Slot{1, i}, b.right->columns[i]);
    }
  }
  return out;
}

}  // namespace

std::optional<std::size_t> Table::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == column) return i;
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (text::iequals(columns[i], column)) return i;
  }
  return std::nullopt;
}

Table load_csv(std::string name, std::string_view text, std::optional<std::string> primary_key) {
  Table t;
  t.name = std::move(name);
  const auto lines = text::split_lines(text);
  std::size_t n = 0;
  while (n < lines.size() && text::trim(lines[n]).empty()) ++n;
  if (n == lines.size()) throw Error(Errc::RaggedRow, "CSV text has no header line", 1);
  for (auto cell : text::split(lines[n], ",")) t.columns.emplace_back(text::trim(cell));
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i].empty()) {
      throw Error(Errc::RaggedRow, "empty column name in header on line " + std::to_string(n + 1), n + 1);
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (text::iequals(t.columns[i], t.columns[j])) {
        throw Error(Errc::RaggedRow, "duplicate column '" + t.columns[i] + "' in header", n + 1);
      }
    }
  }
  for (++n; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    std::vector<std::string> row;
    for (auto cell : text::split(lines[n], ",")) row.emplace_back(text::trim(cell));
    if (row.size() != t.columns.size()) {
      throw Error(Errc::RaggedRow,
                  "line " + std::to_string(n + 1) + " has " + std::to_string(row.size()) +
                      " cells, expected " + std::to_string(t.columns.size()),
                  n + 1);
    }
    t.rows.push_back(std::move(row));
  }
  if (primary_key) {
    const auto idx = t.column_index(*primary_key);
    if (!idx) throw Error(Errc::UnknownColumn, "primary key column not in header: " + *primary_key);
    t.primary_key = t.columns[*idx];
    std::set<std::string> seen;
    for (const auto& row : t.rows) {
      if (!seen.insert(row[*idx]).second) {
        throw Error(Errc::DuplicateKey, "duplicate primary key value '" + row[*idx] + "'");
      }
    }
  }
  return t;
}

ColumnRef ColumnRef::parse(std::string_view s) {
  s = text::trim(s);
  ColumnRef ref;
  if (const auto dot = s.find('.'); dot != std::string_view::npos) {
    ref.table = std::string(text::trim(s.substr(0, dot)));
    ref.column = std::string(text::trim(s.substr(dot + 1)));
  } else {
    ref.column = std::string(s);
  }
  return ref;
}

std::string ColumnRef::str() const { return table ? *table + "." + column : column; }

const Table& find_table(const TableCatalog& catalog, std::string_view name) {
  for (const auto& t : catalog) {
    if (t.name == name) return t;
  }
  for (const auto& t : catalog) {
    if (text::iequals(t.name, name)) return t;
  }
  throw Error(Errc::UnknownTable, "unknown table: " + std::string(name));
}

void validate_plan(const TableCatalog& catalog, const QueryPlan& plan) {
  const auto b = bind(catalog, plan);
  (void)projection(b, plan);
  for (const auto& f : plan.where) (void)resolve(b, f.column);
}

Table query_tables(const TableCatalog& catalog, const QueryPlan& plan) {
  const auto b = bind(catalog, plan);
  const auto cols = projection(b, plan);
  std::vector<Slot> filters;
  for (const auto& f : plan.where) filters.push_back(resolve(b, f.column));

  Table out;
  out.name = "result";
  for (const auto& [slot, name] : cols) out.columns.push_back(name);

  static const std::vector<std::string> kNoRow;
  auto emit = [&](const std::vector<std::string>& l, const std::vector<std::string>& r) {
    auto cell = [&](const Slot& s) -> const std::string& { return s.side == 0 ? l[s.index] : r[s.index]; };
    for (std::size_t i = 0; i < filters.size(); ++i) {
      if (cell(filters[i]) != plan.where[i].value) return;
    }
    std::vector<std::string> row;
    row.reserve(cols.size());
    for (const auto& [slot, name] : cols) row.push_back(cell(slot));
    out.rows.push_back(std::move(row));
  };

  for (const auto& l : b.left->rows) {
    if (!b.right) {
      emit(l, kNoRow);
      continue;
    }
    for (const auto& r : b.right->rows) {
      if (l[b.join_left->index] == r[b.join_right->index]) emit(l, r);
    }
  }
  return out;
}

std::string render_sql(const Table& table) {
  std::string out = "CREATE TABLE " + ident(table.name) + " (\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out += ident(table.columns[i]) + " VARCHAR(255)";
    if (table.primary_key && *table.primary_key == table.columns[i]) out += " PRIMARY KEY";
    out += i + 1 < table.columns.size() ? ",\n" : "\n";
  }
  out += ");\n";
  if (table.rows.empty()) return out;

  out += "\nINSERT INTO " + ident(table.name) + " (";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ", ";
    out += ident(table.columns[i]);
  }
  out += ") VALUES\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out += "(";
    for (std::size_t i = 0; i < table.rows[r].size(); ++i) {
      if (i) out += ", ";
      out += literal(table.rows[r][i]);
    }
    out += r + 1 < table.rows.size() ? "),\n" : ");\n";
  }
  return out;
}

std::string render_sql(const TableCatalog& catalog, const QueryPlan& plan,
                       std::optional<std::string> view_name) {
  const auto b = bind(catalog, plan);
  auto qualified = [&](const Slot& s) {
    const Table* t = s.side == 0 ? b.left : b.right;
    return ident(t->name) + "." + ident(t->columns[s.index]);
  };
  auto ref_text = [&](const ColumnRef& ref) {
    return ref.table ? qualified(resolve(b, ref)) : ident(ref.column);
  };

  std::string select;
  if (plan.select.empty()) {
    const auto cols = projection(b, plan);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i) select += ", ";
      select += b.right ? qualified(cols[i].first) : ident(cols[i].second);
    }
  } else {
    for (std::size_t i = 0; i < plan.select.size(); ++i) {
      if (i) select += ", ";
      select += ref_text(plan.select[i]);
    }
  }

  std::string out;
  if (view_name) out += "CREATE VIEW " + ident(*view_name) + " AS\n";
  out += "SELECT " + select + "\nFROM " + ident(b.left->name);
  if (b.right) {
    out += "\nJOIN " + ident(b.right->name) + " ON " + qualified(*b.join_left) + " = " +
           qualified(*b.join_right);
  }
  for (std::size_t i = 0; i < plan.where.size(); ++i) {
    out += i == 0 ? "\nWHERE " : " AND ";
    out += ref_text(plan.where[i].column) + " = " + literal(plan.where[i].value);
  }
  out += ";\n";
  if (view_name) out += "SELECT * FROM " + ident(*view_name) + ";\n";
  return out;
}

// ---------------------------------------------------------------------------
// SELECT parsing
// ---------------------------------------------------------------------------

namespace {

struct Token {
  enum Kind { Word, String, Symbol, End } kind = End;
  std::string text;
};

class SqlLexer {
 public:
  explicit SqlLexer(std::string_view s) : s_(s) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (i_ >= s_.size()) break;
      if (auto open = quote_open(); open > 0) {
        i_ += open;
        std::string lit;
        while (true) {
          if (i_ >= s_.size()) throw Error(Errc::UnparseablePlan, "unterminated string literal");
          if (s_[i_] == '\'' && i_ + 1 < s_.size() && s_[i_ + 1] == '\'') {
            lit += '\'';
            i_ += 2;
            continue;
          }
          if (auto close = quote_close(); close > 0) {
            i_ += close;
            break;
          }
          lit += s_[i_++];
        }
        out.push_back({Token::String, lit});
        continue;
      }
      const char c = s_[i_];
      if (c == '"') {
        const auto end = s_.find('"', i_ + 1);
        if (end == std::string_view::npos) throw Error(Errc::UnparseablePlan, "unterminated identifier");
        out.push_back({Token::Word, std::string(s_.substr(i_ + 1, end - i_ - 1))});
        i_ = end + 1;
        continue;
      }
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        const auto start = i_;
        while (i_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '.')) {
          ++i_;
        }
        out.push_back({Token::Word, std::string(s_.substr(start, i_ - start))});
        continue;
      }
      out.push_back({Token::Symbol, std::string(1, c)});
      ++i_;
    }
    out.push_back({Token::End, ""});
    return out;
  }

 private:
  std::size_t quote_open() const {
    if (s_[i_] == '\'' || s_[i_] == '`') return 1;
    if (s_.substr(i_, 3) == "\xE2\x80\x98") return 3;  // left single quotation mark
    return 0;
  }
  std::size_t quote_close() const {
    if (s_[i_] == '\'' || s_[i_] == '`') return 1;
    if (s_.substr(i_, 3) == "\xE2\x80\x99") return 3;  // right single quotation mark
    return 0;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

class SelectParser {
 public:
  explicit SelectParser(std::vector<Token> tokens) : t_(std::move(tokens)) {}

  QueryPlan run() {
    QueryPlan plan;
    if (kw("CREATE")) {
      next();
      expect_kw("VIEW");
      word();
      expect_kw("AS");
    }
    expect_kw("SELECT");
    std::vector<std::string> raw_select;
    if (sym("*")) {
      next();
    } else {
      raw_select.push_back(word());
      while (sym(",")) {
        next();
        raw_select.push_back(word());
      }
    }
    expect_kw("FROM");
    plan.from = word();
    alias(plan.from);
    if (kw("INNER")) next();
    if (kw("JOIN")) {
      next();
      JoinClause j;
      j.table = word();
      alias(j.table);
      expect_kw("ON");
      j.left = ColumnRef::parse(word());
      expect_sym("=");
      j.right = ColumnRef::parse(word());
      plan.join = std::move(j);
    }
    if (kw("WHERE")) {
      next();
      while (true) {
        Filter f;
        f.column = ColumnRef::parse(word());
        expect_sym("=");
        if (t_[p_].kind != Token::String && t_[p_].kind != Token::Word) fail("expected a value");
        f.value = t_[p_].text;
        next();
        plan.where.push_back(std::move(f));
        if (!kw("AND")) break;
        next();
      }
    }
    if (!(sym(";") || t_[p_].kind == Token::End)) fail("unexpected '" + t_[p_].text + "'");

    for (const auto& s : raw_select) plan.select.push_back(resolve_alias(ColumnRef::parse(s)));
    if (plan.join) {
      plan.join->left = resolve_alias(plan.join->left);
      plan.join->right = resolve_alias(plan.join->right);
    }
    for (auto& f : plan.where) f.column = resolve_alias(f.column);
    return plan;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::UnparseablePlan, "cannot parse SELECT: " + what);
  }
  bool kw(std::string_view k) const { return t_[p_].kind == Token::Word && text::iequals(t_[p_].text, k); }
  bool sym(std::string_view s) const { return t_[p_].kind == Token::Symbol && t_[p_].text == s; }
  void next() {
    if (t_[p_].kind != Token::End) ++p_;
  }
  void expect_kw(std::string_view k) {
    if (!kw(k)) fail("expected " + std::string(k));
    next();
  }
  void expect_sym(std::string_view s) {
    if (!sym(s)) fail("expected '" + std::string(s) + "'");
    next();
  }
  std::string word() {
    if (t_[p_].kind != Token::Word) fail("expected an identifier");
    auto w = t_[p_].text;
    next();
    return w;
  }
  bool is_clause_keyword() const {
    for (auto k : {"JOIN", "INNER", "ON", "WHERE", "AND", "AS"}) {
      if (kw(k)) return true;
    }
    return false;
  }
  void alias(const std::string& table) {
    if (kw("AS")) next();
    if (t_[p_].kind == Token::Word && !is_clause_keyword()) aliases_[text::to_lower(word())] = table;
  }
  ColumnRef resolve_alias(ColumnRef ref) const {
    if (ref.table) {
      if (auto it = aliases_.find(text::to_lower(*ref.table)); it != aliases_.end()) ref.table = it->second;
    }
    return ref;
  }

  std::vector<Token> t_;
  std::size_t p_ = 0;
  std::map<std::string, std::string> aliases_;
};

}  // namespace

QueryPlan parse_select(std::string_view sql) {
  return SelectParser(SqlLexer(sql).run()).run();
}

}  // namespace s3::metadata
