#include "s3/json_io.hpp"

namespace s3::json_io {

namespace {

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

json hits_json(const std::vector<fql::Hit>& hits) {
  json arr = json::array();
  for (const auto& h : hits) arr.push_back(to_json(h));
  return arr;
}

template <class Children>
json checks_json(const std::vector<fql::CheckReport>& reports, const Children& children) {
  json arr = json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) arr.push_back(to_json(reports[i], children[i]));
  return arr;
}

}  // namespace

json to_json(const fql::Hit& hit) {
  return {{"file", hit.file}, {"line", hit.line}, {"term", hit.term}, {"excerpt", hit.excerpt}};
}

json to_json(const fql::CheckReport& report, const fql::CheckQuery& check) {
  return {{"type", "check"},
          {"query", fql::render_check(check)},
          {"matched", report.matched},
          {"tag", optional_string(report.tag)},
          {"hits", hits_json(report.hits)}};
}

json to_json(const fql::FeatureReport& report, const fql::FqlQuery& query) {
  const auto text = fql::render_fql(query);
  if (const auto* c = std::get_if<fql::CheckReport>(&report.result)) {
    return to_json(*c, std::get<fql::CheckQuery>(query.node));
  }
  if (const auto* m = std::get_if<fql::MaxReport>(&report.result)) {
    const auto& q = std::get<fql::MaxQuery>(query.node);
    json winner = nullptr;
    if (m->winner) {
      winner = {{"tag", m->winner->tag.canonical()},
                {"major", m->winner->tag.major},
                {"minor", m->winner->tag.minor},
                {"raw", m->winner->tag.raw},
                {"child", m->winner->child},
                {"hits", hits_json(m->winner->hits)}};
    }
    return {{"type", "max"}, {"query", text}, {"winner", winner}, {"checks", checks_json(m->checks, q.checks)}};
  }
  const auto& l = std::get<fql::ListReport>(report.result);
  const auto& q = std::get<fql::ListQuery>(query.node);
  json entries = json::array();
  for (const auto& e : l.entries) {
    entries.push_back({{"tag", e.tag}, {"matched", e.matched}, {"hit_count", e.hit_count}});
  }
  return {{"type", "list"}, {"query", text}, {"entries", entries}, {"checks", checks_json(l.checks, q.checks)}};
}

json stats_json(const corpus::CorpusSnapshot* snapshot) {
  json languages = json::object();
  json excluded = json::array();
  if (!snapshot) {
    return {{"root", nullptr}, {"files", 0}, {"lines", 0}, {"languages", languages}, {"excluded", excluded}};
  }
  const auto& st = snapshot->stats();
  for (const auto& [lang, totals] : st.per_language) {
    languages[std::string(corpus::language_name(lang))] = {{"files", totals.files}, {"lines", totals.lines}};
  }
  for (const auto& e : snapshot->excluded()) excluded.push_back({{"path", e.path}, {"reason", e.reason}});
  return {{"root", snapshot->root().string()},
          {"files", st.total.files},
          {"lines", st.total.lines},
          {"languages", languages},
          {"excluded", excluded}};
}

json to_json(const metadata::QualifiedName& name) {
  return {{"module", name.module}, {"function", name.function}, {"name", name.raw}};
}

json to_json(const metadata::CallGraph& graph) {
  json nodes = json::array();
  for (const auto& n : graph.nodes) nodes.push_back(n.raw);
  json edges = json::array();
  for (const auto& e : graph.edges) edges.push_back({e.caller.raw, e.callee.raw});
  return {{"name", graph.name}, {"nodes", nodes}, {"edges", edges}, {"modules", metadata::unique_modules(graph)}};
}

json to_json(const metadata::Table& table) {
  return {{"name", table.name},
          {"columns", table.columns},
          {"rows", table.rows},
          {"primary_key", optional_string(table.primary_key)}};
}

json to_json(const metadata::QueryPlan& plan) {
  json select = json::array();
  for (const auto& c : plan.select) select.push_back(c.str());
  json join = nullptr;
  if (plan.join) join = {{"table", plan.join->table}, {"left", plan.join->left.str()}, {"right", plan.join->right.str()}};
  json where = json::array();
  for (const auto& f : plan.where) where.push_back({{"column", f.column.str()}, {"value", f.value}});
  return {{"select", select}, {"from", plan.from}, {"join", join}, {"where", where}};
}

metadata::QueryPlan plan_from_json(const json& j) {
  metadata::QueryPlan plan;
  plan.from = j.at("from").get<std::string>();
  if (j.contains("select")) {
    for (const auto& c : j["select"]) plan.select.push_back(metadata::ColumnRef::parse(c.get<std::string>()));
  }
  if (j.contains("join") && !j["join"].is_null()) {
    const auto& jj = j["join"];
    plan.join = metadata::JoinClause{jj.at("table").get<std::string>(),
                                     metadata::ColumnRef::parse(jj.at("left").get<std::string>()),
                                     metadata::ColumnRef::parse(jj.at("right").get<std::string>())};
  }
  if (j.contains("where")) {
    for (const auto& f : j["where"]) {
      plan.where.push_back({metadata::ColumnRef::parse(f.at("column").get<std::string>()),
                            f.at("value").get<std::string>()});
    }
  }
  return plan;
}

json to_json(const metadata::LoopMatrix& matrix) {
  json sections = json::array();
  for (const auto& s : matrix.sections) sections.push_back({{"label", s.label}, {"loops", s.loop_count}});
  json rows = json::array();
  for (std::size_t v = 0; v < matrix.variables.size(); ++v) {
    json cells = json::array();
    for (auto role : matrix.cells[v]) cells.push_back(std::string(metadata::role_token(role)));
    rows.push_back({{"variable", matrix.variables[v]}, {"cells", cells}});
  }
  return {{"sections", sections}, {"variables", rows}};
}

json to_json(const std::vector<metadata::VariableUse>& uses) {
  json arr = json::array();
  for (const auto& u : uses) {
    arr.push_back({{"variable", u.variable},
                   {"role", std::string(metadata::role_token(u.role))},
                   {"access", std::string(metadata::role_name(u.role))}});
  }
  return arr;
}

json to_json(const ragdoc::Chunk& chunk) {
  return {{"doc_id", chunk.doc_id}, {"seq", chunk.seq}, {"start", chunk.start}, {"end", chunk.end},
          {"text", chunk.text}};
}

json to_json(const ragdoc::RetrievedContext& context) {
  json items = json::array();
  for (const auto& s : context.items) {
    auto j = to_json(s.chunk);
    j["score"] = s.score;
    items.push_back(std::move(j));
  }
  return {{"query", context.query}, {"items", items}};
}

json to_json(const llm::Turn& turn) {
  return {{"role", turn.role == llm::Turn::Role::User ? "user" : "assistant"},
          {"text", turn.text},
          {"artifacts", turn.artifacts}};
}

json to_json(const llm::Session& session) {
  json turns = json::array();
  for (const auto& t : session.turns) turns.push_back(to_json(t));
  return {{"id", session.id},
          {"mode", std::string(llm::mode_name(session.mode))},
          {"token_budget", session.token_budget},
          {"turns", turns}};
}

}  // namespace s3::json_io
