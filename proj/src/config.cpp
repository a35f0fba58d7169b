#include <fstream>
#include <set>

#include "s3/service.hpp"

namespace s3::service {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(Errc::ConfigError, "config '" + key + "': " + why);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) bad(where, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : obj.items()) {
    if (!ok.count(k)) bad(where.empty() ? k : where + "." + k, "unknown key");
  }
}

template <class T>
T get(const json& obj, const std::string& where, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where.empty() ? key : where + "." + key, "wrong type");
  }
}

std::optional<std::string> get_opt(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get<std::string>(obj, where, key, "");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::optional<std::filesystem::path> get_path(const json& obj, const std::string& where, const char* key,
                                              const std::filesystem::path& base) {
  auto s = get_opt(obj, where, key);
  if (!s) return std::nullopt;
  if (s->empty()) bad(where.empty() ? key : where + "." + key, "empty path");
  return resolve(base, *s);
}

}  // namespace

Config parse_config(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "", {"corpus_root", "index_dir", "sessions_dir", "backend", "embedder", "chunking", "retrieval",
                     "session", "match", "exclusions", "tables", "lexicon", "templates_dir", "server"});
  Config c;
  c.corpus_root = get_path(j, "", "corpus_root", base_dir);
  c.index_dir = get_path(j, "", "index_dir", base_dir).value_or(resolve(base_dir, c.index_dir.string()));
  c.sessions_dir = get_path(j, "", "sessions_dir", base_dir).value_or(resolve(base_dir, c.sessions_dir.string()));
  c.lexicon = get_path(j, "", "lexicon", base_dir);
  c.templates_dir = get_path(j, "", "templates_dir", base_dir);

  if (j.contains("backend")) {
    const auto& b = j["backend"];
    check_keys(b, "backend",
               {"kind", "url", "model", "api_key_env", "max_context_tokens", "mock_script", "mock_unscripted"});
    c.backend.kind = get<std::string>(b, "backend", "kind", c.backend.kind);
    c.backend.url = get<std::string>(b, "backend", "url", "");
    c.backend.model = get<std::string>(b, "backend", "model", "");
    c.backend.api_key_env = get_opt(b, "backend", "api_key_env");
    c.backend.max_context_tokens = get<std::size_t>(b, "backend", "max_context_tokens", c.backend.max_context_tokens);
    c.backend.mock_script = get_path(b, "backend", "mock_script", base_dir);
    c.backend.mock_unscripted = get<std::string>(b, "backend", "mock_unscripted", c.backend.mock_unscripted);
  }
  if (c.backend.kind != "mock" && c.backend.kind != "http") bad("backend.kind", "expected 'mock' or 'http'");
  if (c.backend.kind == "http" && c.backend.url.empty()) bad("backend.url", "required for the http backend");
  if (c.backend.mock_unscripted != "empty" && c.backend.mock_unscripted != "echo_context") {
    bad("backend.mock_unscripted", "expected 'empty' or 'echo_context'");
  }
  if (c.backend.max_context_tokens < 64) bad("backend.max_context_tokens", "must be at least 64");

  if (j.contains("embedder")) {
    const auto& e = j["embedder"];
    check_keys(e, "embedder", {"kind", "url", "dim", "model_id"});
    c.embedder.kind = get<std::string>(e, "embedder", "kind", c.embedder.kind);
    c.embedder.url = get<std::string>(e, "embedder", "url", "");
    c.embedder.dim = get<std::size_t>(e, "embedder", "dim", c.embedder.dim);
    c.embedder.model_id = get<std::string>(e, "embedder", "model_id", c.embedder.model_id);
  }
  if (c.embedder.kind != "hash" && c.embedder.kind != "http") bad("embedder.kind", "expected 'hash' or 'http'");
  if (c.embedder.kind == "http" && c.embedder.url.empty()) bad("embedder.url", "required for the http embedder");
  if (c.embedder.dim == 0) bad("embedder.dim", "must be positive");

  if (j.contains("chunking")) {
    const auto& ch = j["chunking"];
    check_keys(ch, "chunking", {"max_chunk_chars", "overlap_chars"});
    c.chunking.max_chunk_chars = get<std::size_t>(ch, "chunking", "max_chunk_chars", c.chunking.max_chunk_chars);
    c.chunking.overlap_chars = get<std::size_t>(ch, "chunking", "overlap_chars", c.chunking.overlap_chars);
  }
  if (c.chunking.max_chunk_chars == 0) bad("chunking.max_chunk_chars", "must be positive");
  if (c.chunking.overlap_chars >= c.chunking.max_chunk_chars) {
    bad("chunking.overlap_chars", "must be smaller than max_chunk_chars");
  }

  if (j.contains("retrieval")) {
    check_keys(j["retrieval"], "retrieval", {"k"});
    c.retrieval_k = get<std::size_t>(j["retrieval"], "retrieval", "k", c.retrieval_k);
  }
  if (c.retrieval_k == 0) bad("retrieval.k", "must be at least 1");

  if (j.contains("session")) {
    check_keys(j["session"], "session", {"token_budget"});
    c.session_token_budget = get<std::size_t>(j["session"], "session", "token_budget", c.session_token_budget);
  }
  if (c.session_token_budget == 0) bad("session.token_budget", "must be positive");

  if (j.contains("match")) {
    check_keys(j["match"], "match", {"case_sensitive"});
    c.case_sensitive = get<bool>(j["match"], "match", "case_sensitive", false);
  }

  if (j.contains("exclusions")) {
    const auto& x = j["exclusions"];
    check_keys(x, "exclusions", {"globs", "max_file_size", "skip_hidden_dirs", "skip_build_dirs"});
    c.exclusions.globs = get<std::vector<std::string>>(x, "exclusions", "globs", {});
    c.exclusions.max_file_size = get<std::uintmax_t>(x, "exclusions", "max_file_size", c.exclusions.max_file_size);
    c.exclusions.skip_hidden_dirs = get<bool>(x, "exclusions", "skip_hidden_dirs", true);
    c.exclusions.skip_build_dirs = get<bool>(x, "exclusions", "skip_build_dirs", true);
  }

  if (j.contains("tables")) {
    if (!j["tables"].is_array()) bad("tables", "expected an array");
    std::set<std::string> names;
    for (const auto& t : j["tables"]) {
      check_keys(t, "tables[]", {"name", "path", "primary_key"});
      TableSource src;
      src.name = get<std::string>(t, "tables[]", "name", "");
      if (src.name.empty()) bad("tables[].name", "required");
      if (!names.insert(src.name).second) bad("tables[].name", "duplicate table '" + src.name + "'");
      const auto path = get_path(t, "tables[]", "path", base_dir);
      if (!path) bad("tables[].path", "required");
      src.path = *path;
      src.primary_key = get_opt(t, "tables[]", "primary_key");
      c.tables.push_back(std::move(src));
    }
  }

  if (j.contains("server")) {
    const auto& s = j["server"];
    check_keys(s, "server", {"bind_address", "port", "static_dir", "bearer_token_env"});
    c.server.bind_address = get<std::string>(s, "server", "bind_address", c.server.bind_address);
    c.server.port = get<int>(s, "server", "port", c.server.port);
    c.server.static_dir = get_path(s, "server", "static_dir", base_dir);
    c.server.bearer_token_env = get_opt(s, "server", "bearer_token_env");
  }
  if (c.server.port < 0 || c.server.port > 65535) bad("server.port", "out of range");
  if (c.server.bind_address.empty()) bad("server.bind_address", "required");
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, "config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j, std::filesystem::absolute(path).parent_path());
}

}  // namespace s3::service
