#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace s3::metadata {

// ---------------------------------------------------------------------------
// Call graphs (DOT subset)
// ---------------------------------------------------------------------------

/// `module::function`. A token without "::" uses itself as both module and
/// function; `raw` keeps the original spelling and is the identity.
struct QualifiedName {
  std::string module;
  std::string function;
  std::string raw;

  static QualifiedName parse(std::string_view token);

  bool operator==(const QualifiedName& o) const noexcept { return raw == o.raw; }
  auto operator<=>(const QualifiedName& o) const noexcept { return raw <=> o.raw; }
};

struct Edge {
  QualifiedName caller;
  QualifiedName callee;

  bool operator==(const Edge&) const = default;
};

struct CallGraph {
  std::string name;
  std::set<QualifiedName> nodes;
  std::vector<Edge> edges;  // in input order, duplicates preserved
};

/// Accepts one `digraph <name> { ... }` block of bare edge statements
/// (`a::f -> b::g`, chains allowed, trailing `[...]` attribute lists
/// ignored). Subgraphs, attribute statements, ports and undirected edges are
/// rejected with Errc::UnsupportedDot.
CallGraph parse_dot(std::string_view text);

/// Edge statements in canonical text form, one per line.
std::string render_dot(const CallGraph& graph);

std::vector<std::string> unique_modules(const CallGraph& graph);

/// Deduplicated adjacency in edge order. Throws Errc::UnknownFunction when
/// the name is not a node.
std::vector<QualifiedName> callees(const CallGraph& graph, std::string_view function);
std::vector<QualifiedName> callers(const CallGraph& graph, std::string_view function);

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::optional<std::string> primary_key;

  /// Column position by case-insensitive name, if present.
  std::optional<std::size_t> column_index(std::string_view column) const;
};

/// Header line plus comma-separated rows; cells are trimmed, blank lines
/// skipped. Throws Errc::RaggedRow, Errc::DuplicateKey, Errc::UnknownColumn.
Table load_csv(std::string name, std::string_view text,
               std::optional<std::string> primary_key = std::nullopt);

/// Column reference, optionally qualified with a table name (`t.col`).
struct ColumnRef {
  std::optional<std::string> table;
  std::string column;

  static ColumnRef parse(std::string_view text);
  std::string str() const;

  bool operator==(const ColumnRef&) const = default;
};

struct JoinClause {
  std::string table;
  ColumnRef left;
  ColumnRef right;

  bool operator==(const JoinClause&) const = default;
};

struct Filter {
  ColumnRef column;
  std::string value;

  bool operator==(const Filter&) const = default;
};

/// SELECT <select> FROM <from> [JOIN ... ON left = right] [WHERE a = 'x' AND ...].
/// An empty select list means every column of the joined view.
struct QueryPlan {
  std::vector<ColumnRef> select;
  std::string from;
  std::optional<JoinClause> join;
  std::vector<Filter> where;

  bool operator==(const QueryPlan&) const = default;
};

using TableCatalog = std::vector<Table>;

const Table& find_table(const TableCatalog& catalog, std::string_view name);

/// Throws Errc::UnknownTable / Errc::UnknownColumn when the plan does not fit
/// the catalog.
void validate_plan(const TableCatalog& catalog, const QueryPlan& plan);

/// Inner equality join, conjunctive equality filters, projection. Rows keep
/// left-table order.
Table query_tables(const TableCatalog& catalog, const QueryPlan& plan);

/// CREATE TABLE plus one INSERT with every row (no INSERT for an empty table).
std::string render_sql(const Table& table);

/// SELECT statement; with `view_name`, a CREATE VIEW followed by a SELECT *.
std::string render_sql(const TableCatalog& catalog, const QueryPlan& plan,
                       std::optional<std::string> view_name = std::nullopt);

/// Parses the SELECT subset render_sql emits (also accepting a leading
/// CREATE VIEW ... AS, table aliases, and backtick or typographic quotes).
/// Aliases are resolved to table names. Throws Errc::UnparseablePlan.
QueryPlan parse_select(std::string_view sql);

// ---------------------------------------------------------------------------
// Loop-variable matrices
// ---------------------------------------------------------------------------

enum class AccessRole { ReadOnly, WriteOnly, ReadWrite, Unused };

std::string_view role_token(AccessRole role) noexcept;
std::string_view role_name(AccessRole role) noexcept;

struct Section {
  std::string label;
  std::size_t loop_count = 0;
};

struct LoopMatrix {
  std::vector<Section> sections;
  std::vector<std::string> variables;
  std::vector<std::vector<AccessRole>> cells;  // variables x total loops

  std::size_t total_loops() const;
  /// Global column for a loop inside a section; throws Errc::IndexOutOfRange.
  std::size_t column(std::size_t section, std::size_t loop) const;
};

/// Section widths come from the first data row. Throws Errc::RaggedMatrix,
/// Errc::UnknownRole, Errc::DuplicateVariable.
LoopMatrix parse_loop_matrix(std::string_view text);

struct VariableUse {
  std::string variable;
  AccessRole role;

  bool operator==(const VariableUse&) const = default;
};

std::vector<VariableUse> loop_usage(const LoopMatrix& matrix, std::size_t section,
                                    std::size_t loop);

}  // namespace s3::metadata
