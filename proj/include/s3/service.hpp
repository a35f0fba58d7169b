#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "s3/corpus.hpp"
#include "s3/error.hpp"
#include "s3/llm.hpp"
#include "s3/metadata.hpp"
#include "s3/ragdoc.hpp"

namespace s3::service {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct BackendConfig {
  std::string kind = "mock";  // mock | http
  std::string url;
  std::string model;
  std::optional<std::string> api_key_env;
  std::size_t max_context_tokens = 4096;
  std::optional<std::filesystem::path> mock_script;
  std::string mock_unscripted = "empty";  // empty | echo_context
};

struct EmbedderConfig {
  std::string kind = "hash";  // hash | http
  std::string url;
  std::size_t dim = ragdoc::kDefaultDim;
  std::string model_id = "http";
};

struct ServerConfig {
  std::string bind_address = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;
  std::optional<std::string> bearer_token_env;
};

struct TableSource {
  std::string name;
  std::filesystem::path path;
  std::optional<std::string> primary_key;
};

struct Config {
  std::optional<std::filesystem::path> corpus_root;
  std::filesystem::path index_dir = ".s3/index";
  std::filesystem::path sessions_dir = ".s3/sessions";
  BackendConfig backend;
  EmbedderConfig embedder;
  ragdoc::ChunkConfig chunking;
  std::size_t retrieval_k = 4;
  std::size_t session_token_budget = 4096;
  bool case_sensitive = false;
  corpus::ExclusionRules exclusions;
  std::vector<TableSource> tables;
  std::optional<std::filesystem::path> lexicon;
  std::optional<std::filesystem::path> templates_dir;
  ServerConfig server;
};

/// Relative paths resolve against `base_dir`. Unknown keys, wrong types and
/// out-of-range values throw Errc::ConfigError.
Config parse_config(const json& j, const std::filesystem::path& base_dir);
Config load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

/// One JSON lines file per session: a header record followed by one record
/// per turn. Every mutation appends to the file.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  llm::Session create(llm::Mode mode, std::size_t token_budget);
  /// Loads from disk on first access. Throws Errc::UnknownSession.
  llm::Session get(const std::string& id);
  /// Runs `fn` on the session under its lock and appends new turns.
  template <class Fn>
  auto update(const std::string& id, Fn&& fn);

  static std::string header_line(const llm::Session& session);
  static std::string turn_line(const llm::Turn& turn);
  static llm::Session parse_file(const std::filesystem::path& path);
  std::filesystem::path path_for(const std::string& id) const;

 private:
  struct Slot {
    std::mutex mu;
    llm::Session session;
  };
  std::shared_ptr<Slot> slot(const std::string& id);
  void append_turns(const llm::Session& session, std::size_t from);

  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
};

template <class Fn>
auto SessionStore::update(const std::string& id, Fn&& fn) {
  auto s = slot(id);
  std::lock_guard lock(s->mu);
  const auto before = s->session.turns.size();
  auto restore = s->session;
  try {
    auto result = fn(s->session);
    append_turns(s->session, before);
    return result;
  } catch (...) {
    s->session = std::move(restore);
    throw;
  }
}

// ---------------------------------------------------------------------------
// Service core
// ---------------------------------------------------------------------------

/// The operations behind both the CLI and the HTTP API. Every method returns
/// the JSON document sent to clients.
class Service {
 public:
  /// Backend and embedder default to the ones described by the config.
  explicit Service(Config config, std::unique_ptr<llm::ChatBackend> backend = nullptr,
                   std::unique_ptr<ragdoc::Embedder> embedder = nullptr);
  ~Service();

  const Config& config() const noexcept { return config_; }
  llm::ChatBackend& backend() noexcept { return *backend_; }

  /// Scans `root` (or the configured corpus root) and makes it current.
  json scan(const std::optional<std::filesystem::path>& root = std::nullopt);
  json stats() const;
  /// `root` defaults to the current corpus, scanning the configured root on
  /// first use.
  json fql(const std::string& query, const std::optional<std::filesystem::path>& root, bool strict);
  /// {question, mode, session?, corpus?, examples?}
  json ask(const json& request);
  /// {corpus?, documents: [{doc_id, text}]}
  json ingest(const json& request);
  json session(const std::string& id);

  static json error_body(const std::exception& e);

 private:
  std::shared_ptr<const corpus::CorpusSnapshot> current_corpus();
  std::shared_ptr<const ragdoc::ChunkIndex> doc_index(const std::string& name);
  const metadata::TableCatalog& tables();
  json ask_fql(llm::Session& session, const std::string& question);
  json ask_metadata(llm::Session& session, const std::string& question, const json& request);
  json ask_docs(llm::Session& session, const std::string& question, const std::string& corpus);

  Config config_;
  std::unique_ptr<llm::ChatBackend> backend_;
  std::unique_ptr<ragdoc::Embedder> embedder_;
  llm::Lexicon lexicon_;
  ragdoc::TemplateSet templates_;
  std::once_flag examples_once_;
  std::unique_ptr<ragdoc::ChunkIndex> examples_;
  SessionStore sessions_;

  mutable std::shared_mutex corpus_mu_;
  std::shared_ptr<const corpus::CorpusSnapshot> corpus_;

  std::mutex index_mu_;
  std::map<std::string, std::shared_ptr<const ragdoc::ChunkIndex>> indexes_;

  std::once_flag tables_once_;
  metadata::TableCatalog tables_;
};

/// HTTP status for an error raised by the service.
int http_status(const std::exception& e);

/// JSON API under /api, plus the static web UI when configured.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  /// Binds the configured address; port 0 picks a free port. Returns the port.
  int bind();
  void listen();  // blocks
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace s3::service
