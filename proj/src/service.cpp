#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>

#include "s3/json_io.hpp"
#include "s3/service.hpp"
#include "s3/text.hpp"

namespace s3::service {

namespace {

[[noreturn]] void schema(const std::string& message) { throw Error(Errc::SchemaViolation, message); }

std::string require_string(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_string()) schema(std::string("'") + key + "' must be a string");
  return obj[key].get<std::string>();
}

std::string corpus_name(const json& request) {
  if (!request.contains("corpus") || request["corpus"].is_null()) return "default";
  const auto name = require_string(request, "corpus");
  static const std::regex ok(R"([A-Za-z0-9_][A-Za-z0-9_.-]{0,63})");
  if (!std::regex_match(name, ok)) schema("invalid corpus name '" + name + "'");
  return name;
}

std::string read_file(const std::filesystem::path& path, Errc errc) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::unique_ptr<llm::ChatBackend> make_backend(const BackendConfig& c) {
  const llm::Capabilities caps{c.max_context_tokens};
  if (c.kind == "http") {
    std::optional<std::string> key;
    if (c.api_key_env) {
      const char* v = std::getenv(c.api_key_env->c_str());
      if (!v || !*v) throw Error(Errc::ConfigError, "environment variable " + *c.api_key_env + " is not set");
      key = v;
    }
    return std::make_unique<llm::GenericHttpBackend>(c.url, c.model, key, caps);
  }
  auto mock = std::make_unique<llm::MockBackend>(
      c.mock_unscripted == "echo_context" ? llm::MockBackend::Unscripted::EchoContext
                                          : llm::MockBackend::Unscripted::Empty,
      caps);
  if (c.mock_script) mock->load_script(*c.mock_script);
  return mock;
}

std::unique_ptr<ragdoc::Embedder> make_embedder(const EmbedderConfig& c) {
  if (c.kind == "http") return std::make_unique<ragdoc::HttpEmbedder>(c.url, c.dim, c.model_id);
  return std::make_unique<ragdoc::HashEmbedder>(c.dim);
}

}  // namespace

Service::Service(Config config, std::unique_ptr<llm::ChatBackend> backend, std::unique_ptr<ragdoc::Embedder> embedder)
    : config_(std::move(config)),
      backend_(backend ? std::move(backend) : make_backend(config_.backend)),
      embedder_(embedder ? std::move(embedder) : make_embedder(config_.embedder)),
      lexicon_(config_.lexicon ? llm::load_lexicon(*config_.lexicon) : llm::builtin_lexicon()),
      templates_(config_.templates_dir ? ragdoc::TemplateSet::from_directory(*config_.templates_dir)
                                       : ragdoc::TemplateSet::builtin()),
      sessions_(config_.sessions_dir) {
  for (const auto& t : config_.tables) {
    if (!std::filesystem::is_regular_file(t.path)) {
      throw Error(Errc::ConfigError, "table '" + t.name + "': no such file " + t.path.string());
    }
  }
}

Service::~Service() = default;

json Service::scan(const std::optional<std::filesystem::path>& root) {
  const auto target = root ? root : config_.corpus_root;
  if (!target) throw Error(Errc::InvalidArgument, "no corpus root given or configured");
  auto snapshot = std::make_shared<const corpus::CorpusSnapshot>(corpus::scan_tree(*target, config_.exclusions));
  std::unique_lock lock(corpus_mu_);
  corpus_ = snapshot;
  return json_io::stats_json(snapshot.get());
}

json Service::stats() const {
  std::shared_lock lock(corpus_mu_);
  return json_io::stats_json(corpus_.get());
}

std::shared_ptr<const corpus::CorpusSnapshot> Service::current_corpus() {
  {
    std::shared_lock lock(corpus_mu_);
    if (corpus_) return corpus_;
  }
  if (!config_.corpus_root) throw Error(Errc::InvalidArgument, "no corpus: scan one first or pass a root");
  scan(std::nullopt);
  std::shared_lock lock(corpus_mu_);
  return corpus_;
}

json Service::fql(const std::string& query, const std::optional<std::filesystem::path>& root, bool strict) {
  const auto parsed = fql::parse_fql(query, strict ? fql::ParseMode::Strict : fql::ParseMode::Lenient);
  std::shared_ptr<const corpus::CorpusSnapshot> snapshot;
  if (root) {
    snapshot = std::make_shared<const corpus::CorpusSnapshot>(corpus::scan_tree(*root, config_.exclusions));
  } else {
    snapshot = current_corpus();
  }
  const auto report = fql::execute(parsed, *snapshot, {config_.case_sensitive, 0});
  return json_io::to_json(report, parsed);
}

json Service::session(const std::string& id) { return json_io::to_json(sessions_.get(id)); }

json Service::ask(const json& request) {
  if (!request.is_object()) schema("request must be a JSON object");
  const auto question = require_string(request, "question");
  if (text::trim(question).empty()) schema("'question' must not be empty");
  const auto mode = llm::mode_from_name(require_string(request, "mode"));
  if (!mode) schema("'mode' must be one of fql, metadata, docs");
  const auto corpus = corpus_name(request);

  std::string id;
  if (request.contains("session_id") && !request["session_id"].is_null()) {
    id = require_string(request, "session_id");
  } else {
    id = sessions_.create(*mode, config_.session_token_budget).id;
  }
  return sessions_.update(id, [&](llm::Session& s) {
    if (s.mode != *mode) {
      throw Error(Errc::InvalidArgument, "session " + s.id + " is in " + std::string(llm::mode_name(s.mode)) +
                                             " mode, not " + std::string(llm::mode_name(*mode)));
    }
    json out;
    switch (*mode) {
      case llm::Mode::Fql: out = ask_fql(s, question); break;
      case llm::Mode::Metadata: out = ask_metadata(s, question, request); break;
      case llm::Mode::Docs: out = ask_docs(s, question, corpus); break;
    }
    out["mode"] = std::string(llm::mode_name(*mode));
    out["session_id"] = s.id;
    out["question"] = question;
    return out;
  });
}

namespace {

std::string summarize(const json& report) {
  const auto type = report.at("type").get<std::string>();
  if (type == "check") {
    const auto tag = report["tag"].is_null() ? std::string("pattern") : report["tag"].get<std::string>();
    const auto n = report["hits"].size();
    if (!report["matched"].get<bool>()) return tag + ": not found";
    return tag + ": found (" + std::to_string(n) + (n == 1 ? " hit)" : " hits)");
  }
  if (type == "max") {
    if (report["winner"].is_null()) return "winner: none";
    return "winner: " + report["winner"]["tag"].get<std::string>();
  }
  std::string out;
  for (const auto& e : report["entries"]) {
    if (!out.empty()) out += ", ";
    out += e["tag"].get<std::string>() + (e["matched"].get<bool>() ? ": yes" : ": no");
  }
  return out;
}

}  // namespace

json Service::ask_fql(llm::Session& session, const std::string& question) {
  std::call_once(examples_once_, [&] {
    examples_ = std::make_unique<ragdoc::ChunkIndex>(
        llm::build_example_index(*embedder_, lexicon_, llm::builtin_handbook()));
  });
  llm::FqlTranslatorOptions opts;
  opts.examples_k = config_.retrieval_k;
  const llm::FqlTranslator translator(lexicon_, *examples_, *embedder_, templates_, opts);
  const auto t = translator.translate(question, *backend_);
  const auto snapshot = current_corpus();
  const auto report = json_io::to_json(fql::execute(t.query, *snapshot, {config_.case_sensitive, 0}), t.query);
  const json artifact{{"type", "fql"},
                      {"query", fql::render_fql(t.query)},
                      {"source", t.source == llm::Source::Llm ? "llm" : "fallback"},
                      {"attempts", t.attempts},
                      {"parse_error", t.parse_error ? json(*t.parse_error) : json(nullptr)},
                      {"report", report}};
  const auto answer = summarize(report);
  session.add_exchange(question, answer, artifact);
  return {{"answer", answer}, {"artifact", artifact}};
}

const metadata::TableCatalog& Service::tables() {
  std::call_once(tables_once_, [&] {
    metadata::TableCatalog catalog;
    for (const auto& t : config_.tables) {
      catalog.push_back(metadata::load_csv(t.name, read_file(t.path, Errc::IoError), t.primary_key));
    }
    tables_ = std::move(catalog);
  });
  return tables_;
}

json Service::ask_metadata(llm::Session& session, const std::string& question, const json& request) {
  const auto& catalog = tables();
  if (catalog.empty()) throw Error(Errc::InvalidArgument, "no tables configured");
  std::vector<llm::TableExample> examples;
  if (request.contains("examples")) {
    if (!request["examples"].is_array()) schema("'examples' must be an array");
    for (const auto& e : request["examples"]) {
      if (!e.is_object()) schema("'examples' entries must be objects");
      examples.push_back({require_string(e, "question"), require_string(e, "answer")});
    }
  }
  const auto shots = examples.empty() ? llm::Shots::Zero : llm::Shots::Few;
  const auto t = llm::translate_to_table_query(question, catalog, *backend_, templates_, shots, examples);
  json artifact{{"type", "table_query"}, {"attempts", t.attempts}};
  std::string answer;
  if (const auto* plan = std::get_if<metadata::QueryPlan>(&t.result)) {
    const auto result = metadata::query_tables(catalog, *plan);
    artifact["sql"] = metadata::render_sql(catalog, *plan);
    artifact["plan"] = json_io::to_json(*plan);
    artifact["result"] = json_io::to_json(result);
    answer = std::to_string(result.rows.size()) + (result.rows.size() == 1 ? " row" : " rows");
  } else {
    artifact["sql"] = std::get<llm::SqlText>(t.result).sql;
    artifact["plan"] = nullptr;
    artifact["result"] = nullptr;
    answer = artifact["sql"].get<std::string>();
  }
  session.add_exchange(question, answer, artifact);
  return {{"answer", answer}, {"artifact", artifact}};
}

std::shared_ptr<const ragdoc::ChunkIndex> Service::doc_index(const std::string& name) {
  std::lock_guard lock(index_mu_);
  if (auto it = indexes_.find(name); it != indexes_.end()) return it->second;
  const auto path = config_.index_dir / (name + ".jsonl");
  std::shared_ptr<const ragdoc::ChunkIndex> index;
  if (std::filesystem::exists(path)) {
    index = std::make_shared<const ragdoc::ChunkIndex>(ragdoc::load_index(path));
  } else {
    index = std::make_shared<const ragdoc::ChunkIndex>(embedder_->id(), embedder_->dim());
  }
  indexes_[name] = index;
  return index;
}

json Service::ask_docs(llm::Session& session, const std::string& question, const std::string& corpus) {
  const auto index = doc_index(corpus);
  if (index->empty()) throw Error(Errc::EmptyIndex, "corpus '" + corpus + "' has no ingested documents");
  llm::AnswerOptions opts;
  opts.k = config_.retrieval_k;
  const auto answer = llm::answer_with_context(session, question, *index, *embedder_, *backend_, templates_, opts);
  json cites = json::array();
  for (const auto& [doc, seq] : answer.citations) {
    json c{{"doc_id", doc}, {"seq", seq}};
    for (const auto& e : index->entries()) {
      if (e.chunk.doc_id == doc && e.chunk.seq == seq) c["text"] = e.chunk.text;
    }
    cites.push_back(std::move(c));
  }
  const json artifact{{"type", "docs"}, {"corpus", corpus}, {"citations", cites}};
  session.turns.back().artifacts = artifact;
  return {{"answer", answer.text}, {"artifact", artifact}, {"citations", cites}};
}

json Service::ingest(const json& request) {
  if (!request.is_object()) schema("request must be a JSON object");
  const auto name = corpus_name(request);
  if (!request.contains("documents") || !request["documents"].is_array() || request["documents"].empty()) {
    schema("'documents' must be a non-empty array");
  }
  std::vector<std::pair<std::string, std::string>> docs;
  for (const auto& d : request["documents"]) {
    if (!d.is_object()) schema("'documents' entries must be objects");
    docs.emplace_back(require_string(d, "doc_id"), require_string(d, "text"));
    if (docs.back().first.empty()) schema("'doc_id' must not be empty");
  }

  doc_index(name);
  std::lock_guard lock(index_mu_);
  const auto current = indexes_.at(name);
  if (current->embedder_id() != embedder_->id()) {
    throw Error(Errc::EmbedderMismatch, "corpus '" + name + "' was indexed with '" + current->embedder_id() +
                                            "', the service uses '" + embedder_->id() + "'");
  }
  std::set<std::string> seen;
  for (const auto& e : current->entries()) seen.insert(e.chunk.doc_id);
  auto next = std::make_shared<ragdoc::ChunkIndex>(*current);
  std::vector<ragdoc::IndexEntry> added;
  json documents = json::array();
  for (const auto& [doc_id, body] : docs) {
    if (!seen.insert(doc_id).second) {
      throw Error(Errc::InvalidArgument, "document '" + doc_id + "' is already in corpus '" + name + "'");
    }
    auto entries = next->add_document(*embedder_, doc_id, body, config_.chunking);
    documents.push_back({{"doc_id", doc_id}, {"chunks", entries.size()}});
    added.insert(added.end(), std::make_move_iterator(entries.begin()), std::make_move_iterator(entries.end()));
  }
  std::filesystem::create_directories(config_.index_dir);
  ragdoc::append_index_file(config_.index_dir / (name + ".jsonl"), added, embedder_->id());
  indexes_[name] = next;
  return {{"corpus", name}, {"documents", documents}, {"chunks_added", added.size()}, {"total_chunks", next->size()}};
}

json Service::error_body(const std::exception& e) {
  json body;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    body["error"] = std::string(errc_name(err->code()));
    body["message"] = err->what();
    if (err->location()) body["location"] = *err->location();
    if (const auto* se = dynamic_cast<const SyntaxError*>(&e)) body["expected"] = se->expected();
    if (const auto* te = dynamic_cast<const llm::TranslationError*>(&e)) {
      body["parse_error"] = te->parse_error();
      body["raw_response"] = te->raw_response();
      body["attempts"] = te->attempts();
      body["fallback"] = err->code() == Errc::NoLexiconMatch ? json("no_match") : json(nullptr);
    }
  } else if (dynamic_cast<const json::exception*>(&e)) {
    body["error"] = "SchemaViolation";
    body["message"] = e.what();
  } else {
    body["error"] = "Internal";
    body["message"] = e.what();
  }
  return body;
}

int http_status(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return dynamic_cast<const json::exception*>(&e) ? 400 : 500;
  switch (err->code()) {
    case Errc::SyntaxError:
    case Errc::EmptyPattern:
    case Errc::BadVersionTag:
    case Errc::SchemaViolation:
    case Errc::InvalidArgument:
    case Errc::RootNotFound:
    case Errc::EmptyIndex:
    case Errc::EmptyDocument:
    case Errc::EmbedderMismatch:
      return 400;
    case Errc::UnknownSession:
      return 404;
    case Errc::NoLexiconMatch:
    case Errc::UnparseablePlan:
    case Errc::UnknownColumnInPlan:
      return 422;
    case Errc::BackendError:
      return 502;
    default:
      return 500;
  }
}

}  // namespace s3::service
