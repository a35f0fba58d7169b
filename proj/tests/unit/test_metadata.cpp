#include <doctest.h>

#include "s3/error.hpp"
#include "s3/metadata.hpp"
#include "support.hpp"

using namespace s3;
using namespace s3::metadata;
using s3::testing::code_of;
using s3::testing::fixture;
using s3::testing::read_file;

namespace {

TableCatalog paper_catalog() {
  return {load_csv("Table1", read_file(fixture("components.csv")), "Component"),
          load_csv("Table2", read_file(fixture("derived_types.csv")))};
}

std::string straight_quotes(std::string s) {
  s = text::replace_all(std::move(s), "`", "'");
  return s;
}

}  // namespace

TEST_SUITE("metadata.dot") {
  TEST_CASE("fixture graph") {
    const auto g = parse_dot(read_file(fixture("e3sm_callgraph.dot")));
    CHECK(g.name == "G");
    CHECK(unique_modules(g).size() == 17);
    std::vector<std::string> names;
    for (const auto& q : callers(g, "fileutils::relavu")) names.push_back(q.raw);
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"canopyhydrologymod::canopyhydrology_readnl", "ch4varcon::ch4conrd",
                                            "controlmod::control_init"});
    CHECK(callees(g, "firemod::firefluxes").size() == 3);
  }

  TEST_CASE("invariants") {
    const auto g = parse_dot(read_file(fixture("e3sm_callgraph.dot")));
    std::set<std::string> modules;
    for (const auto& e : g.edges) {
      CHECK(g.nodes.count(e.caller) == 1);
      CHECK(g.nodes.count(e.callee) == 1);
    }
    for (const auto& n : g.nodes) {
      modules.insert(n.module);
      for (const auto& c : callees(g, n.raw)) {
        const auto back = callers(g, c.raw);
        CHECK(std::find(back.begin(), back.end(), n) != back.end());
      }
    }
    CHECK(std::vector<std::string>(modules.begin(), modules.end()) == unique_modules(g));
    const auto again = parse_dot("digraph G {\n" + render_dot(g) + "}\n");
    CHECK(again.edges == g.edges);
  }

  TEST_CASE("chains, attributes, unqualified names") {
    const auto g = parse_dot("digraph x { a::f -> b::g -> c [color=red]; }");
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges[1].caller.raw == "b::g");
    CHECK(g.edges[1].callee.module == "c");
    CHECK(g.edges[1].callee.function == "c");
  }

  TEST_CASE("errors") {
    CHECK(code_of([] { parse_dot("graph G { a -- b }"); }) == Errc::NotADigraph);
    CHECK(code_of([] { parse_dot("digraph G { subgraph s { a -> b } }"); }) == Errc::UnsupportedDot);
    CHECK(code_of([] { parse_dot("digraph G { a -> }"); }) == Errc::MalformedEdge);
    const auto g = parse_dot("digraph G { a -> b }");
    CHECK(code_of([&] { callers(g, "zz"); }) == Errc::UnknownFunction);
  }
}

TEST_SUITE("metadata.tables") {
  TEST_CASE("load_csv") {
    const auto t = load_csv("t", "a, b\n1 ,2\n\n3,4\n", "a");
    CHECK(t.columns == std::vector<std::string>{"a", "b"});
    CHECK(t.rows == std::vector<std::vector<std::string>>{{"1", "2"}, {"3", "4"}});
    CHECK(code_of([] { load_csv("t", "a,b\n1\n"); }) == Errc::RaggedRow);
    CHECK(code_of([] { load_csv("t", "a,b\n1,2\n1,3\n", "a"); }) == Errc::DuplicateKey);
    CHECK(code_of([] { load_csv("t", "a,b\n", "c"); }) == Errc::UnknownColumn);
  }

  TEST_CASE("paper query returns dz") {
    const auto catalog = paper_catalog();
    const auto plan = parse_select(read_file(fixture("response_query.sql")));
    CHECK(plan.from == "Table1");
    REQUIRE(plan.join.has_value());
    CHECK(plan.where.size() == 2);
    const auto result = query_tables(catalog, plan);
    CHECK(result.rows == std::vector<std::vector<std::string>>{{"dz"}});
    CHECK(result.rows == s3::testing::oracle_query(catalog, plan));
  }

  TEST_CASE("paper view resolves aliases") {
    const auto catalog = paper_catalog();
    const auto plan = parse_select(read_file(fixture("response_view.sql")));
    CHECK(plan.from == "table1");
    REQUIRE(plan.join.has_value());
    CHECK(plan.join->table == "table2");
    const auto result = query_tables(catalog, plan);
    CHECK(result.columns == std::vector<std::string>{"Component", "Type", "Dimension", "DerivedType"});
    CHECK(result.rows.size() == 6);
    CHECK(result.rows == s3::testing::oracle_query(catalog, plan));
  }

  TEST_CASE("render_sql matches the published table definition") {
    const auto t = load_csv("components", read_file(fixture("components.csv")), "Component");
    const auto expected = straight_quotes(read_file(fixture("response_create_table.sql")));
    CHECK(text::trim(render_sql(t)) == text::trim(expected));
  }

  TEST_CASE("render_sql of a plan parses back") {
    const auto catalog = paper_catalog();
    const auto plan = parse_select(read_file(fixture("response_query.sql")));
    CHECK(parse_select(render_sql(catalog, plan)) == plan);
    const auto view = render_sql(catalog, plan, std::string("v"));
    CHECK(view.find("CREATE VIEW v AS") != std::string::npos);
    CHECK(parse_select(view) == plan);
  }

  TEST_CASE("plan validation") {
    const auto catalog = paper_catalog();
    QueryPlan p;
    p.from = "Nope";
    CHECK(code_of([&] { validate_plan(catalog, p); }) == Errc::UnknownTable);
    p.from = "Table1";
    p.select = {ColumnRef::parse("Missing")};
    CHECK(code_of([&] { validate_plan(catalog, p); }) == Errc::UnknownColumn);
    CHECK(code_of([] { parse_select("DELETE FROM x"); }) == Errc::UnparseablePlan);
  }

  TEST_CASE("property: query_tables equals nested-loop oracle") {
    std::mt19937_64 rng(5);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    for (int iter = 0; iter < 200; ++iter) {
      Table a{"A", {"k", "x", "y"}, {}, std::nullopt};
      Table b{"B", {"k2", "z"}, {}, std::nullopt};
      const auto na = pick(12), nb = pick(12);
      for (std::size_t i = 0; i < na; ++i) {
        a.rows.push_back({std::to_string(pick(5)), "x" + std::to_string(pick(3)), "y" + std::to_string(pick(3))});
      }
      for (std::size_t i = 0; i < nb; ++i) b.rows.push_back({std::to_string(pick(5)), "z" + std::to_string(pick(3))});
      const TableCatalog catalog{a, b};

      QueryPlan plan;
      plan.from = "A";
      const bool join = pick(2) == 0;
      if (join) plan.join = JoinClause{"B", ColumnRef::parse("A.k"), ColumnRef::parse("B.k2")};
      std::vector<std::string> cols = {"k", "x", "y"};
      if (join) cols.insert(cols.end(), {"k2", "z"});
      if (pick(3)) {
        const auto n = 1 + pick(3);
        for (std::size_t i = 0; i < n; ++i) plan.select.push_back(ColumnRef::parse(cols[pick(cols.size())]));
      }
      const auto nf = pick(3);
      for (std::size_t i = 0; i < nf; ++i) {
        const auto& c = cols[pick(cols.size())];
        const std::string value = c == "k" || c == "k2" ? std::to_string(pick(5)) : c + std::to_string(pick(3));
        plan.where.push_back({ColumnRef::parse(c), value});
      }
      CAPTURE(render_sql(catalog, plan));
      CHECK(query_tables(catalog, plan).rows == s3::testing::oracle_query(catalog, plan));
      const auto reparsed = parse_select(render_sql(catalog, plan));
      CHECK(query_tables(catalog, reparsed).rows == query_tables(catalog, plan).rows);
      if (!plan.select.empty()) CHECK(reparsed == plan);
    }
  }
}

TEST_SUITE("metadata.loops") {
  TEST_CASE("lake temperature matrix") {
    const auto m = parse_loop_matrix(read_file(fixture("LakeTemperatureAllLoopVariables.txt")));
    REQUIRE(m.sections.size() == 3);
    CHECK(m.sections[0].loop_count == 8);
    CHECK(m.sections[1].loop_count == 4);
    CHECK(m.sections[2].loop_count == 9);
    CHECK(m.sections[0].label == "LakeTemperature");
    CHECK(m.total_loops() == 21);
    const auto use = loop_usage(m, 0, 0);
    REQUIRE(use.size() == 8);
    CHECK(use[0] == VariableUse{"filter_lakec", AccessRole::ReadOnly});
    for (std::size_t i = 1; i < use.size(); ++i) CHECK(use[i].role == AccessRole::WriteOnly);
    CHECK(code_of([&] { m.column(3, 0); }) == Errc::IndexOutOfRange);
    CHECK(code_of([&] { m.column(1, 4); }) == Errc::IndexOutOfRange);
  }

  TEST_CASE("unused cells are omitted from loop usage") {
    const auto m = parse_loop_matrix(read_file(fixture("LakeTemperatureAllLoopVariables.txt")));
    for (std::size_t s = 0; s < m.sections.size(); ++s) {
      for (std::size_t l = 0; l < m.sections[s].loop_count; ++l) {
        for (const auto& u : loop_usage(m, s, l)) CHECK(u.role != AccessRole::Unused);
      }
    }
  }

  TEST_CASE("errors") {
    CHECK(code_of([] { parse_loop_matrix("  |S |\nv |ro ro|\nw |ro|\n"); }) == Errc::RaggedMatrix);
    CHECK(code_of([] { parse_loop_matrix("  |S |\nv |zz|\n"); }) == Errc::UnknownRole);
    CHECK(code_of([] { parse_loop_matrix("  |S |\nv |ro|\nv |wo|\n"); }) == Errc::DuplicateVariable);
    CHECK(role_token(AccessRole::ReadWrite) == "rw");
    CHECK(role_name(AccessRole::Unused) == "Unused");
  }
}
