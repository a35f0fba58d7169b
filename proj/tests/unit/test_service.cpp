#include <doctest.h>

#include <cstdlib>

#include "s3/error.hpp"
#include "s3/service.hpp"
#include "service_support.hpp"

using namespace s3;
using namespace s3::service;
using s3::testing::code_of;
using s3::testing::fixture;
using s3::testing::read_file;
using s3::testing::TempDir;
using s3::testing::write_file;

namespace {

Config test_config(const TempDir& dir) {
  return parse_config(json{{"corpus_root", fixture("hpc_tree").string()},
                           {"index_dir", (dir / "index").string()},
                           {"sessions_dir", (dir / "sessions").string()},
                           {"tables", json::array({{{"name", "Table1"},
                                                    {"path", fixture("components.csv").string()},
                                                    {"primary_key", "Component"}},
                                                   {{"name", "Table2"}, {"path", fixture("derived_types.csv").string()}}})},
                           {"server", {{"port", 0}}}},
                      dir.path());
}

json post(httplib::Client& c, const std::string& path, const json& body, int expect) {
  const auto res = c.Post(path, body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == expect);
  return json::parse(res->body);
}

}  // namespace

TEST_SUITE("service.config") {
  TEST_CASE("defaults and relative paths") {
    const auto c = parse_config(json::object(), "/base");
    CHECK(c.index_dir == "/base/.s3/index");
    CHECK(c.sessions_dir == "/base/.s3/sessions");
    CHECK(c.retrieval_k == 4);
    CHECK(c.chunking.max_chunk_chars == 1000);
    CHECK(c.chunking.overlap_chars == 150);
    CHECK(c.backend.kind == "mock");
    const auto d = parse_config(json{{"corpus_root", "src"}, {"tables", json::array({{{"name", "t"}, {"path", "t.csv"}}})}},
                                "/base");
    CHECK(d.corpus_root == std::filesystem::path("/base/src"));
    CHECK(d.tables.at(0).path == "/base/t.csv");
  }

  TEST_CASE("rejections") {
    const std::vector<json> bad = {
        {{"unknown", 1}},
        {{"backend", {{"kind", "magic"}}}},
        {{"backend", {{"kind", "http"}}}},
        {{"backend", {{"max_context_tokens", 10}}}},
        {{"backend", {{"api_key", "sk-..."}}}},
        {{"chunking", {{"max_chunk_chars", 100}, {"overlap_chars", 100}}}},
        {{"retrieval", {{"k", 0}}}},
        {{"server", {{"port", 70000}}}},
        {{"retrieval", {{"k", "four"}}}},
        {{"tables", json::array({{{"name", "t"}}})}},
    };
    for (const auto& j : bad) {
      CAPTURE(j.dump());
      CHECK(code_of([&] { parse_config(j, "/"); }) == Errc::ConfigError);
    }
  }

  TEST_CASE("load_config resolves against the file's directory") {
    TempDir dir;
    write_file(dir / "conf/s3.json", R"({"corpus_root": "../tree"})");
    const auto c = load_config(dir / "conf/s3.json");
    CHECK(c.corpus_root->lexically_normal() == (dir / "tree").lexically_normal());
    write_file(dir / "bad.json", "{");
    CHECK(code_of([&] { load_config(dir / "bad.json"); }) == Errc::ConfigError);
  }
}

TEST_SUITE("service.sessions") {
  TEST_CASE("JSONL replay is byte-identical") {
    TempDir dir;
    std::string id;
    {
      SessionStore store(dir / "s");
      id = store.create(llm::Mode::Docs, 512).id;
      CHECK(id.size() == 16);
      store.update(id, [](llm::Session& s) {
        s.add_exchange("q1 \"quoted\" K\xC3\xB6ln", "a1", json{{"citations", json::array({json::array({"d", 0})})}});
        return 0;
      });
      store.update(id, [](llm::Session& s) {
        s.add_exchange("q2", "a2\nline");
        return 0;
      });
    }
    const auto on_disk = read_file(dir / ("s/" + id + ".jsonl"));
    SessionStore fresh(dir / "s");
    const auto s = fresh.get(id);
    CHECK(s.turns.size() == 4);
    CHECK(s.token_budget == 512);
    CHECK(s3::testing::session_file_from_memory(s) == on_disk);
    CHECK(SessionStore::parse_file(dir / ("s/" + id + ".jsonl")) == s);
  }

  TEST_CASE("failed updates leave no trace") {
    TempDir dir;
    SessionStore store(dir.path());
    const auto id = store.create(llm::Mode::Fql, 100).id;
    CHECK_THROWS(store.update(id, [](llm::Session& s) -> int {
      s.add_exchange("q", "a");
      throw std::runtime_error("boom");
    }));
    CHECK(store.get(id).turns.empty());
    CHECK(text::split_lines(read_file(store.path_for(id))).size() == 1);
  }

  TEST_CASE("unknown and malformed ids") {
    TempDir dir;
    SessionStore store(dir.path());
    CHECK(code_of([&] { store.get("0123456789abcdef"); }) == Errc::UnknownSession);
    CHECK(code_of([&] { store.get("../etc/passwd"); }) == Errc::UnknownSession);
  }
}

TEST_SUITE("service.core") {
  TEST_CASE("fql over the configured corpus") {
    TempDir dir;
    Service svc(test_config(dir));
    CHECK(svc.stats()["files"] == 0);
    const auto r = svc.fql(read_file(fixture("table1/mpi_version.fql")), std::nullopt, false);
    CHECK(r["type"] == "max");
    CHECK(r["winner"]["tag"] == "3.1");
    CHECK(svc.stats()["files"] == 8);
    CHECK(code_of([&] { svc.fql("CHECK (a", std::nullopt, false); }) == Errc::SyntaxError);
  }

  TEST_CASE("ask in each mode") {
    TempDir dir;
    auto mock = std::make_unique<llm::MockBackend>(llm::MockBackend::Unscripted::EchoContext);
    auto* m = mock.get();
    Service svc(test_config(dir), std::move(mock));

    m->script("CHECK (!$OMP || pragma omp) WHERE (*) AS (OpenMP)");
    const auto a = svc.ask({{"mode", "fql"}, {"question", "Check whether OpenMP is used"}});
    CHECK(a["answer"] == "OpenMP: found (3 hits)");
    CHECK(a["artifact"]["source"] == "llm");
    const auto id = a["session_id"].get<std::string>();

    m->script(read_file(fixture("response_query.sql")));
    const auto t = svc.ask({{"mode", "metadata"}, {"question", "2D components of col_pp?"}});
    CHECK(t["artifact"]["result"]["rows"] == json::array({json::array({"dz"})}));

    CHECK(code_of([&] { svc.ask({{"mode", "docs"}, {"question", "anything"}}); }) == Errc::EmptyIndex);
    json docs = json::array();
    for (const auto* name : {"lake_temperature", "snow_hydrology", "urban_energy"}) {
      docs.push_back({{"doc_id", name}, {"text", read_file(fixture(std::string("docs/") + name + ".txt"))}});
    }
    const auto ing = svc.ingest({{"documents", docs}});
    CHECK(ing["chunks_added"].get<int>() >= 3);
    CHECK(code_of([&] { svc.ingest({{"documents", json::array({docs[0]})}}); }) == Errc::InvalidArgument);
    const auto d = svc.ask({{"mode", "docs"}, {"question", "thermal conductivities at interfaces"}});
    CHECK_FALSE(d["citations"].empty());
    CHECK(d["answer"].get<std::string>().rfind("[lake_temperature#", 0) == 0);

    CHECK(svc.session(id)["turns"].size() == 2);
    CHECK(code_of([&] { svc.ask({{"mode", "docs"}, {"question", "q"}, {"session_id", id}}); }) ==
          Errc::InvalidArgument);
    CHECK(code_of([&] { svc.ask({{"mode", "poetry"}, {"question", "q"}}); }) == Errc::SchemaViolation);
    CHECK(code_of([&] { svc.ask({{"mode", "fql"}}); }) == Errc::SchemaViolation);
  }

  TEST_CASE("ingested index persists across service instances") {
    TempDir dir;
    {
      Service svc(test_config(dir));
      svc.ingest({{"corpus", "lake"},
                  {"documents", json::array({{{"doc_id", "lt"}, {"text", read_file(fixture("docs/lake_temperature.txt"))}}})}});
    }
    auto mock = std::make_unique<llm::MockBackend>(llm::MockBackend::Unscripted::EchoContext);
    Service svc(test_config(dir), std::move(mock));
    const auto d = svc.ask({{"mode", "docs"}, {"corpus", "lake"}, {"question", "phase changes"}});
    CHECK_FALSE(d["citations"].empty());
  }
}

TEST_SUITE("service.http") {
  TEST_CASE("endpoints and status codes") {
    TempDir dir;
    auto mock = std::make_unique<llm::MockBackend>();
    auto* m = mock.get();
    Service svc(test_config(dir), std::move(mock));
    s3::testing::LiveServer server(svc);
    auto c = server.client();

    const auto stats = c.Get("/api/corpus/stats");
    REQUIRE(stats);
    CHECK(json::parse(stats->body)["files"] == 0);
    CHECK(post(c, "/api/corpus/scan", json::object(), 200)["files"] == 8);

    const auto r = post(c, "/api/fql", {{"query", "CHECK (use mpi) WHERE (*.F90)"}}, 200);
    CHECK(r["hits"].size() == 1);
    const auto bad = post(c, "/api/fql", {{"query", "CHECK (a) WHERE (*) junk"}}, 400);
    CHECK(bad["error"] == "SyntaxError");
    CHECK(bad["location"] == 20);
    post(c, "/api/fql", {{"query", 3}}, 400);
    post(c, "/api/fql", {{"query", "CHECK (a) WHERE (*)"}, {"root", "/no/such/dir"}}, 400);
    CHECK(c.Post("/api/ask", "{not json", "application/json")->status == 400);

    const auto ask = post(c, "/api/ask", {{"mode", "fql"}, {"question", "Is OpenMP used?"}}, 200);
    CHECK(ask["artifact"]["source"] == "fallback");
    CHECK(ask["artifact"]["query"] == "CHECK (!$OMP || pragma omp) WHERE (*) AS (OpenMP)");
    const auto id = ask["session_id"].get<std::string>();
    const auto sess = c.Get("/api/sessions/" + id);
    REQUIRE(sess);
    CHECK(json::parse(sess->body)["turns"].size() == 2);
    CHECK(c.Get("/api/sessions/ffffffffffffffff")->status == 404);

    const auto fail = post(c, "/api/ask", {{"mode", "fql"}, {"question", "How fast is it?"}}, 422);
    CHECK(fail["error"] == "NoLexiconMatch");
    CHECK(fail["fallback"] == "no_match");
    CHECK(fail["attempts"] == 2);

    m->fail_next("backend unreachable");
    CHECK(post(c, "/api/ask", {{"mode", "fql"}, {"question", "Is OpenMP used?"}}, 502)["error"] == "BackendError");

    const auto ing = post(c, "/api/ingest", {{"documents", json::array({{{"doc_id", "a"}, {"text", "alpha beta"}}})}}, 200);
    CHECK(ing["total_chunks"] == 1);
    post(c, "/api/ingest", {{"documents", json::array({{{"doc_id", "b"}, {"text", ""}}})}}, 400);
  }

  TEST_CASE("bearer token") {
    TempDir dir;
    auto cfg = test_config(dir);
    cfg.server.bearer_token_env = "S3_TEST_TOKEN";
    ::setenv("S3_TEST_TOKEN", "sesame", 1);
    Service svc(cfg);
    s3::testing::LiveServer server(svc);
    auto c = server.client();
    CHECK(c.Get("/api/corpus/stats")->status == 401);
    CHECK(c.Get("/api/corpus/stats", {{"Authorization", "Bearer wrong"}})->status == 401);
    CHECK(c.Get("/api/corpus/stats", {{"Authorization", "Bearer sesame"}})->status == 200);
    ::unsetenv("S3_TEST_TOKEN");
    CHECK_THROWS_AS(HttpServer{svc}, Error);
  }

  TEST_CASE("CLI and HTTP return the same fql artifacts") {
    TempDir dir;
    Service svc(test_config(dir));
    s3::testing::LiveServer server(svc);
    auto c = server.client();
    const auto root = fixture("hpc_tree").string();
    for (const auto* name : {"table1/openmp.fql", "table1/mpi_version.fql", "table1/scheduling.fql"}) {
      CAPTURE(name);
      const auto query = read_file(fixture(name));
      const auto cli = s3::testing::run_cli({"fql", query, "--root", root, "--json"});
      CHECK(cli.status == 0);
      const auto http = post(c, "/api/fql", {{"query", query}, {"root", root}}, 200);
      CHECK(json::parse(cli.out) == http);
    }
  }

  TEST_CASE("CLI exit codes") {
    CHECK(s3::testing::run_cli({"fql", "CHECK (a", "--root", fixture("hpc_tree").string()}).status == 3);
    CHECK(s3::testing::run_cli({"fql", "CHECK (a) WHERE (*)", "--root", "/no/such/dir"}).status == 2);
    CHECK(s3::testing::run_cli({"ask", "q", "--mode", "poetry"}).status == 64);
    CHECK(s3::testing::run_cli({"scan", fixture("hpc_tree").string()}).status == 0);
  }
}
