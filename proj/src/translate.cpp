#include <algorithm>
#include <limits>
#include <regex>

#include "s3/error.hpp"
#include "s3/json_io.hpp"
#include "s3/llm.hpp"
#include "s3/text.hpp"

namespace s3::llm {

std::string_view mode_name(Mode m) noexcept {
  switch (m) {
    case Mode::Fql: return "fql";
    case Mode::Metadata: return "metadata";
    case Mode::Docs: return "docs";
  }
  return "docs";
}

std::optional<Mode> mode_from_name(std::string_view name) noexcept {
  if (name == "fql") return Mode::Fql;
  if (name == "metadata") return Mode::Metadata;
  if (name == "docs") return Mode::Docs;
  return std::nullopt;
}

void Session::add_exchange(std::string question, std::string answer, nlohmann::json artifacts) {
  turns.push_back({Turn::Role::User, std::move(question), nullptr});
  turns.push_back({Turn::Role::Assistant, std::move(answer), std::move(artifacts)});
}

// ---------------------------------------------------------------------------
// FQL
// ---------------------------------------------------------------------------

namespace {

fql::FqlQuery extract_query(std::string_view response) {
  static const std::regex anchor(R"(\b(CHECK|MAX|LIST)\s*\()");
  const std::string r(response);
  std::smatch m;
  if (!std::regex_search(r, m, anchor)) {
    throw Error(Errc::SyntaxError, "no CHECK, MAX or LIST query found in the response");
  }
  const auto start = static_cast<std::size_t>(m.position(0));
  auto parsed = fql::parse_fql_prefix(std::string_view(r).substr(start), fql::ParseMode::Lenient);
  const auto canonical = fql::render_fql(parsed.query);
  auto strict = fql::parse_fql(canonical, fql::ParseMode::Strict);
  if (!(strict == parsed.query)) {
    throw Error(Errc::SyntaxError, "query does not survive canonicalization: " + canonical);
  }
  return strict;
}

std::size_t prompt_budget_chars(const Capabilities& caps, const CompletionParams& params) {
  const auto reserve = std::min(params.max_tokens, caps.max_context_tokens / 2);
  return (caps.max_context_tokens - reserve) * kCharsPerToken;
}

std::string retry_prompt(const std::string& prompt, const std::string& error, std::string_view ask) {
  return prompt + "\n\nThe previous answer could not be used: " + error + "\n" + std::string(ask) + "\n";
}

}  // namespace

std::optional<std::string> extract_fql(std::string_view response) {
  try {
    return fql::render_fql(extract_query(response));
  } catch (const Error&) {
    return std::nullopt;
  }
}

FqlTranslator::FqlTranslator(const Lexicon& lexicon, const ragdoc::ChunkIndex& examples,
                             const ragdoc::Embedder& embedder, const ragdoc::TemplateSet& templates,
                             FqlTranslatorOptions options)
    : lexicon_(lexicon), examples_(examples), embedder_(embedder), templates_(templates), options_(options) {}

std::string FqlTranslator::build_prompt(std::string_view question, std::size_t budget_chars) const {
  ragdoc::RetrievedContext ctx{std::string(question), {}};
  if (!examples_.empty()) ctx = ragdoc::retrieve(examples_, embedder_, question, options_.examples_k);
  return ragdoc::assemble_prompt(templates_, "fql_translate", question, ctx, budget_chars).text;
}

FqlTranslation FqlTranslator::translate(std::string_view question, ChatBackend& backend) const {
  const auto budget = prompt_budget_chars(backend.capabilities(), options_.params);
  const auto prompt = build_prompt(question, budget);
  FqlTranslation result;
  std::string last_error;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    result.attempts = attempt;
    const auto p = attempt == 1 ? prompt : retry_prompt(prompt, last_error, "Reply with exactly one FQL query.");
    result.raw_response = backend.complete(p, options_.params);
    try {
      result.query = extract_query(result.raw_response);
      result.source = Source::Llm;
      return result;
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  result.parse_error = last_error;
  try {
    result.query = fallback_query(question, lexicon_);
  } catch (const Error& e) {
    if (e.code() != Errc::NoLexiconMatch) throw;
    throw TranslationError(Errc::NoLexiconMatch, e.what(), last_error, result.raw_response, result.attempts);
  }
  result.source = Source::Fallback;
  return result;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kSchemaSampleRows = 10;

std::string render_schemas(const metadata::TableCatalog& tables) {
  std::string out;
  for (const auto& t : tables) {
    out += "Table " + t.name + " (";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      if (i) out += ", ";
      out += t.columns[i];
      if (t.primary_key && *t.primary_key == t.columns[i]) out += " PRIMARY KEY";
    }
    out += ")\n";
    for (std::size_t r = 0; r < std::min(kSchemaSampleRows, t.rows.size()); ++r) {
      for (std::size_t i = 0; i < t.rows[r].size(); ++i) out += (i ? "," : "") + t.rows[r][i];
      out += "\n";
    }
  }
  return out;
}

std::size_t find_word_ci(const std::string& haystack, std::string_view word) {
  const auto lower = text::to_lower(haystack);
  const auto w = text::to_lower(word);
  std::size_t pos = 0;
  while ((pos = lower.find(w, pos)) != std::string::npos) {
    const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(lower[pos - 1]));
    const auto end = pos + w.size();
    const bool right = end >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end]));
    if (left && right) return pos;
    ++pos;
  }
  return std::string::npos;
}

std::variant<metadata::QueryPlan, SqlText> interpret_table_answer(const std::string& raw,
                                                                  const metadata::TableCatalog& tables) {
  std::optional<metadata::QueryPlan> plan;
  if (const auto brace = raw.find('{'); brace != std::string::npos) {
    const auto close = raw.rfind('}');
    try {
      const auto j = nlohmann::json::parse(raw.substr(brace, close - brace + 1));
      if (j.is_object() && j.contains("from")) plan = json_io::plan_from_json(j);
    } catch (const nlohmann::json::exception&) {
    }
  }
  if (!plan) {
    auto start = find_word_ci(raw, "SELECT");
    const auto view = find_word_ci(raw, "CREATE VIEW");
    if (view != std::string::npos && view < start) start = view;
    if (start == std::string::npos) {
      for (auto kw : {"CREATE TABLE", "INSERT INTO"}) {
        if (const auto p = find_word_ci(raw, kw); p != std::string::npos) {
          return SqlText{std::string(text::trim(raw.substr(p)))};
        }
      }
      throw Error(Errc::UnparseablePlan, "no SQL statement or query plan found in the response");
    }
    auto end = raw.find(';', start);
    if (end != std::string::npos) ++end;
    plan = metadata::parse_select(raw.substr(start, end == std::string::npos ? std::string::npos : end - start));
  }
  try {
    metadata::validate_plan(tables, *plan);
  } catch (const Error& e) {
    if (e.code() == Errc::UnknownColumn || e.code() == Errc::UnknownTable) {
      throw Error(Errc::UnknownColumnInPlan, e.what());
    }
    throw;
  }
  return *plan;
}

}  // namespace

std::string build_table_prompt(const ragdoc::TemplateSet& templates, std::string_view question,
                               const metadata::TableCatalog& tables, Shots shots,
                               const std::vector<TableExample>& examples) {
  std::string block;
  if (shots == Shots::Few && !examples.empty()) {
    block = "\n### Examples\n";
    for (const auto& ex : examples) block += "Question: " + ex.question + "\nSQL: " + ex.answer + "\n\n";
  }
  return ragdoc::assemble_prompt(templates, "table_query", question, {}, std::numeric_limits<std::size_t>::max(),
                                 {{"schemas", render_schemas(tables)}, {"examples", block}})
      .text;
}

TableTranslation translate_to_table_query(std::string_view question, const metadata::TableCatalog& tables,
                                          ChatBackend& backend, const ragdoc::TemplateSet& templates, Shots shots,
                                          const std::vector<TableExample>& examples) {
  const auto prompt = build_table_prompt(templates, question, tables, shots, examples);
  TableTranslation result;
  std::optional<Error> last;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    result.attempts = attempt;
    const auto p = attempt == 1 ? prompt
                                : retry_prompt(prompt, last->what(), "Reply with a single SQL SELECT statement.");
    result.raw_response = backend.complete(p, {});
    try {
      result.result = interpret_table_answer(result.raw_response, tables);
      return result;
    } catch (const Error& e) {
      if (e.code() != Errc::UnparseablePlan && e.code() != Errc::UnknownColumnInPlan) throw;
      last = e;
    }
  }
  throw TranslationError(last->code(), std::string(last->what()) + " (after retry)", last->what(),
                         result.raw_response, result.attempts);
}

// ---------------------------------------------------------------------------
// Documents
// ---------------------------------------------------------------------------

Answer answer_with_context(Session& session, std::string_view question, const ragdoc::ChunkIndex& index,
                           const ragdoc::Embedder& embedder, ChatBackend& backend,
                           const ragdoc::TemplateSet& templates, const AnswerOptions& options) {
  if (session.mode != Mode::Docs) {
    throw Error(Errc::InvalidArgument, "session " + session.id + " is not in docs mode");
  }
  const auto ctx = ragdoc::retrieve(index, embedder, question, options.k);
  const auto budget_tokens = std::min(session.token_budget, backend.capabilities().max_context_tokens);
  const auto budget_chars = budget_tokens * kCharsPerToken;

  std::vector<std::pair<const Turn*, const Turn*>> exchanges;
  for (std::size_t i = 0; i + 1 < session.turns.size(); i += 2) {
    exchanges.emplace_back(&session.turns[i], &session.turns[i + 1]);
  }

  std::optional<ragdoc::AssembledPrompt> assembled;
  for (std::size_t drop = 0; drop <= exchanges.size(); ++drop) {
    std::string history;
    if (drop < exchanges.size()) {
      history = "\n### Conversation so far\n";
      for (std::size_t i = drop; i < exchanges.size(); ++i) {
        history += "User: " + exchanges[i].first->text + "\nAssistant: " + exchanges[i].second->text + "\n";
      }
    }
    try {
      assembled = ragdoc::assemble_prompt(templates, "docs_answer", question, ctx, budget_chars,
                                          {{"history", history}});
      break;
    } catch (const Error& e) {
      if (e.code() != Errc::BudgetTooSmall || drop == exchanges.size()) throw;
    }
  }

  Answer answer;
  answer.prompt = assembled->text;
  answer.citations = assembled->included;
  answer.text = backend.complete(answer.prompt, options.params);

  nlohmann::json cites = nlohmann::json::array();
  for (const auto& [doc, seq] : answer.citations) cites.push_back({{"doc_id", doc}, {"seq", seq}});
  session.add_exchange(std::string(question), answer.text, {{"citations", cites}});
  return answer;
}

}  // namespace s3::llm
