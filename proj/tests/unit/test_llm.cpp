#include <doctest.h>

#include "s3/error.hpp"
#include "s3/llm.hpp"
#include "support.hpp"

using namespace s3;
using namespace s3::llm;
using s3::fql::CheckQuery;
using s3::fql::FqlQuery;
using s3::fql::Wildcard;
using s3::testing::code_of;
using s3::testing::fixture;
using s3::testing::read_file;

namespace {

CheckQuery check(std::vector<std::string> terms, std::string tag) {
  return CheckQuery{{std::move(terms)}, {Wildcard{}}, std::move(tag)};
}

struct Pipeline {
  Lexicon lexicon = builtin_lexicon();
  ragdoc::HashEmbedder embedder;
  ragdoc::TemplateSet templates = ragdoc::TemplateSet::builtin();
  ragdoc::ChunkIndex examples = build_example_index(embedder, lexicon, builtin_handbook());
  FqlTranslator translator{lexicon, examples, embedder, templates};
};

metadata::TableCatalog paper_catalog() {
  return {metadata::load_csv("Table1", read_file(fixture("components.csv")), "Component"),
          metadata::load_csv("Table2", read_file(fixture("derived_types.csv")))};
}

}  // namespace

TEST_SUITE("llm.mock") {
  TEST_CASE("rule order: fingerprint, substring, queue, unscripted") {
    MockBackend m;
    m.script("queued");
    m.on_contains("needle", "by substring");
    m.on_fingerprint(MockBackend::fingerprint("exact"), "by fingerprint");
    CHECK(m.complete("exact", {}) == "by fingerprint");
    CHECK(m.complete("a needle here", {}) == "by substring");
    CHECK(m.complete("other", {}) == "queued");
    CHECK(m.complete("other", {}) == "");
    m.fail_next("down");
    CHECK(code_of([&] { m.complete("x", {}); }) == Errc::BackendError);
    CHECK(m.prompts().size() == 5);
  }

  TEST_CASE("echo context") {
    MockBackend m(MockBackend::Unscripted::EchoContext);
    const auto reply = m.complete("### Context\n[doc#2]\nfirst passage\n\n[doc#3]\nsecond\n\n### Question\nq", {});
    CHECK(reply == "[doc#2] first passage");
  }
}

TEST_SUITE("llm.lexicon") {
  TEST_CASE("builtin entries") {
    const auto lex = builtin_lexicon();
    CHECK(lex.size() >= 6);
    const auto omp = std::find_if(lex.begin(), lex.end(), [](const auto& e) { return e.term == "OpenMP"; });
    REQUIRE(omp != lex.end());
    CHECK(omp->keywords == std::vector<std::string>{"!$OMP", "pragma omp"});
    CHECK(omp->category == Category::Library);
  }

  TEST_CASE("format validation") {
    CHECK(parse_lexicon("").empty());
    CHECK(code_of([] { parse_lexicon("[A]\nkeywords = a\n[A]\nkeywords = b\n"); }) == Errc::DuplicateTerm);
    CHECK(code_of([] { parse_lexicon("[A]\ncategory = version\nversion = new\nkeywords = a\n"); }) ==
          Errc::BadVersionTag);
    CHECK(code_of([] { parse_lexicon("keywords = a\n"); }) == Errc::LexiconFormat);
    const auto lex = parse_lexicon("[X]\ncategory = version\nfamily = X\nversion = 31\nkeywords = a\n");
    CHECK(fql::normalize_version(*lex[0].version_tag) == fql::VersionTag{3, 1, ""});
  }

  TEST_CASE("fallback queries for the case-study questions") {
    const auto lex = builtin_lexicon();
    CHECK(fallback_query("Please Generate FQL query to Check Whether OpenMP is used", lex) ==
          FqlQuery{check({"!$OMP", "pragma omp"}, "OpenMP")});
    CHECK(fallback_query("Find the minimum version of MPI", lex) ==
          FqlQuery{fql::MaxQuery{{check({"MPI_AINT_ADD", "MPI_AINT_DIFF"}, "3.1"),
                                  check({"MPI_COMM_DUP_WITH_INFO", "MPI_COMM_SET_INFO"}, "3.0"),
                                  check({"mpi.h", "use mpi", "mpif.h"}, "2.0")}}});
    CHECK(fallback_query("Which MPI process topologies are used?", lex) ==
          FqlQuery{fql::ListQuery{{check({"MPI_CART_CREATE"}, "Cartesian"), check({"MPI_GRAPH_CREATE"}, "Graph"),
                                   check({"MPI_DIST_GRAPH_CREATE_ADJACENT"}, "Distributed Graph")}}});
    CHECK(fallback_query("Is MPI used?", lex) == FqlQuery{check({"mpi.h", "use mpi", "mpif.h"}, "MPI")});
    CHECK(code_of([&] { fallback_query("How fast is it?", lex); }) == Errc::NoLexiconMatch);
    CHECK(code_of([&] { fallback_query("is openmpi used", lex); }) == Errc::NoLexiconMatch);
  }

  TEST_CASE("every rendered example parses") {
    const auto lex = builtin_lexicon();
    for (const auto& e : lex) {
      CAPTURE(e.term);
      const auto text = render_lexicon_example(e, lex);
      CHECK(extract_fql(text).has_value());
    }
  }
}

TEST_SUITE("llm.fql") {
  TEST_CASE("extract_fql") {
    CHECK(extract_fql("Sure! FQL: CHECK (!$OMP || pragma omp) WHERE (*) AS (OpenMP). Done.") ==
          std::optional<std::string>("CHECK (!$OMP || pragma omp) WHERE (*) AS (OpenMP)"));
    CHECK(extract_fql(read_file(fixture("response_topology.txt"))).has_value());
    CHECK_FALSE(extract_fql("I cannot help with that").has_value());
    CHECK_FALSE(extract_fql("CHECK the docs").has_value());
  }

  TEST_CASE("scripted correct response") {
    Pipeline p;
    MockBackend m;
    m.script("FQL: CHECK (!$OMP || pragma omp) WHERE (*) AS (OpenMP)");
    const auto t = p.translator.translate("Please Generate FQL query to Check Whether OpenMP is used", m);
    CHECK(t.source == Source::Llm);
    CHECK(t.attempts == 1);
    CHECK(t.query == FqlQuery{check({"!$OMP", "pragma omp"}, "OpenMP")});
    const auto prompt = m.prompts().at(0);
    CHECK(prompt.find("Check Whether OpenMP is used") != std::string::npos);
    CHECK(prompt.find("pragma omp") != std::string::npos);
  }

  TEST_CASE("retry carries the parse error") {
    Pipeline p;
    MockBackend m;
    m.script("CHECK (a) WHERE (*) AS");
    m.script("CHECK (a) WHERE (*) AS (A)");
    const auto t = p.translator.translate("Is OpenMP used?", m);
    CHECK(t.attempts == 2);
    CHECK(t.source == Source::Llm);
    REQUIRE(m.prompts().size() == 2);
    CHECK(m.prompts()[1].size() > m.prompts()[0].size());
    CHECK(m.prompts()[1].find("offset") != std::string::npos);
  }

  TEST_CASE("garbage falls back to the lexicon deterministically") {
    Pipeline p;
    for (const auto* q : {"Please Generate FQL query to Check Whether OpenMP is used", "Find the minimum version of MPI",
                          "Which MPI process topologies are used?"}) {
      MockBackend a, b;
      a.script("no idea");
      a.script("still nothing");
      const auto ta = p.translator.translate(q, a);
      const auto tb = p.translator.translate(q, b);
      CHECK(ta.source == Source::Fallback);
      CHECK(ta.attempts == 2);
      CHECK(ta.parse_error.has_value());
      CHECK(ta.query == fallback_query(q, p.lexicon));
      CHECK(tb.query == ta.query);
      CHECK(fql::parse_fql(fql::render_fql(ta.query)) == ta.query);
    }
  }

  TEST_CASE("no fallback match is a translation error") {
    Pipeline p;
    MockBackend m;
    try {
      p.translator.translate("How fast is it?", m);
      FAIL("expected TranslationError");
    } catch (const TranslationError& e) {
      CHECK(e.code() == Errc::NoLexiconMatch);
      CHECK(e.attempts() == 2);
    }
  }

  TEST_CASE("backend errors propagate") {
    Pipeline p;
    MockBackend m;
    m.fail_next("connection refused");
    CHECK(code_of([&] { p.translator.translate("Is OpenMP used?", m); }) == Errc::BackendError);
  }

  TEST_CASE("prompt stays within the backend budget") {
    Pipeline p;
    for (std::size_t ctx : {256u, 1024u, 8192u}) {
      MockBackend m(MockBackend::Unscripted::Empty, Capabilities{ctx});
      m.script("CHECK (x) WHERE (*)");
      p.translator.translate("Is OpenMP used?", m);
      CHECK(estimate_tokens(m.prompts().at(0)) <= ctx);
    }
  }
}

TEST_SUITE("llm.tables") {
  TEST_CASE("paper SQL answer executes to dz") {
    const auto catalog = paper_catalog();
    MockBackend m;
    m.script("Here is the query:\n" + read_file(fixture("response_query.sql")));
    const auto t = translate_to_table_query("Which 2D components belong to col_pp?", catalog, m,
                                            ragdoc::TemplateSet::builtin());
    const auto& plan = std::get<metadata::QueryPlan>(t.result);
    CHECK(metadata::query_tables(catalog, plan).rows == std::vector<std::vector<std::string>>{{"dz"}});
    CHECK(t.attempts == 1);
  }

  TEST_CASE("JSON plans are accepted") {
    const auto catalog = paper_catalog();
    MockBackend m;
    m.script(R"({"select":["Component"],"from":"Table1","join":null,"where":[{"column":"Type","value":"integer"}]})");
    const auto t = translate_to_table_query("integer components?", catalog, m, ragdoc::TemplateSet::builtin());
    CHECK(metadata::query_tables(catalog, std::get<metadata::QueryPlan>(t.result)).rows ==
          std::vector<std::vector<std::string>>{{"snl"}});
  }

  TEST_CASE("CREATE TABLE text is returned as SQL") {
    MockBackend m;
    m.script(read_file(fixture("response_create_table.sql")));
    const auto t = translate_to_table_query("Create a table", paper_catalog(), m, ragdoc::TemplateSet::builtin());
    CHECK(std::get<SqlText>(t.result).sql.find("CREATE TABLE components") != std::string::npos);
  }

  TEST_CASE("unknown column after retry") {
    MockBackend m;
    m.script("SELECT Colour FROM Table1;");
    m.script("SELECT Colour FROM Table1;");
    try {
      translate_to_table_query("colours?", paper_catalog(), m, ragdoc::TemplateSet::builtin());
      FAIL("expected TranslationError");
    } catch (const TranslationError& e) {
      CHECK(e.code() == Errc::UnknownColumnInPlan);
      CHECK(e.attempts() == 2);
    }
  }

  TEST_CASE("unparseable after retry") {
    MockBackend m;
    try {
      translate_to_table_query("?", paper_catalog(), m, ragdoc::TemplateSet::builtin());
      FAIL("expected TranslationError");
    } catch (const TranslationError& e) {
      CHECK(e.code() == Errc::UnparseablePlan);
    }
  }

  TEST_CASE("zero-shot and few-shot prompts differ exactly by the examples block") {
    const auto set = ragdoc::TemplateSet::builtin();
    const auto catalog = paper_catalog();
    const std::vector<TableExample> ex = {{"List components", "SELECT Component FROM Table1;"}};
    const auto zero = build_table_prompt(set, "q?", catalog, Shots::Zero, ex);
    const auto few = build_table_prompt(set, "q?", catalog, Shots::Few, ex);
    CHECK(zero.find("List components") == std::string::npos);
    CHECK(few.find("List components") != std::string::npos);
    CHECK(zero.find("Table Table1 (Component PRIMARY KEY, Type, Dimension)") != std::string::npos);
    std::size_t prefix = 0;
    while (prefix < zero.size() && zero[prefix] == few[prefix]) ++prefix;
    std::size_t suffix = 0;
    while (suffix < zero.size() - prefix && zero[zero.size() - 1 - suffix] == few[few.size() - 1 - suffix]) ++suffix;
    const auto inserted = few.substr(prefix, few.size() - prefix - suffix);
    CHECK(zero.size() - prefix - suffix == 0);
    CHECK(inserted.find("SELECT Component FROM Table1;") != std::string::npos);
  }
}

TEST_SUITE("llm.answer") {
  ragdoc::ChunkIndex lake_index(const ragdoc::Embedder& e) {
    ragdoc::ChunkIndex index(e.id(), e.dim());
    for (const auto* name : {"lake_temperature", "snow_hydrology", "canopy_radiation", "soil_hydrology",
                             "river_routing", "aerosol_deposition", "urban_energy"}) {
      index.add_document(e, name, read_file(fixture(std::string("docs/") + name + ".txt")), {600, 100});
    }
    return index;
  }

  TEST_CASE("citations include the harmonic-mean chunk") {
    const ragdoc::HashEmbedder e;
    const auto index = lake_index(e);
    MockBackend m(MockBackend::Unscripted::EchoContext);
    Session s{"s1", Mode::Docs, {}, 4096};
    const auto a = answer_with_context(s, "thermal conductivities at interfaces", index, e, m,
                                       ragdoc::TemplateSet::builtin());
    bool harmonic = false;
    for (const auto& [doc, seq] : a.citations) {
      for (const auto& en : index.entries()) {
        if (en.chunk.doc_id == doc && en.chunk.seq == seq && en.chunk.text.find("harmonic mean") != std::string::npos) {
          harmonic = true;
        }
      }
    }
    CHECK(harmonic);
    CHECK(a.text.find("[lake_temperature#") != std::string::npos);
    CHECK(s.turns.size() == 2);
    CHECK(s.turns[0].text == "thermal conductivities at interfaces");
    CHECK(s.turns[1].text == a.text);
  }

  TEST_CASE("history is included, then dropped oldest first") {
    const ragdoc::HashEmbedder e;
    const auto index = lake_index(e);
    MockBackend m;
    m.script("first answer");
    m.script("second answer");
    Session s{"s1", Mode::Docs, {}, 4096};
    answer_with_context(s, "What is the lake model?", index, e, m, ragdoc::TemplateSet::builtin());
    const auto a2 = answer_with_context(s, "And phase changes?", index, e, m, ragdoc::TemplateSet::builtin());
    CHECK(a2.prompt.find("What is the lake model?") != std::string::npos);
    CHECK(a2.prompt.find("first answer") != std::string::npos);
    CHECK(s.turns.size() == 4);

    Session tiny{"s2", Mode::Docs, {}, 300};
    for (int i = 0; i < 6; ++i) tiny.add_exchange("old question " + std::to_string(i), std::string(200, 'x'));
    MockBackend m2;
    const auto a3 = answer_with_context(tiny, "newest question", index, e, m2, ragdoc::TemplateSet::builtin(), {1, {}});
    CHECK(a3.prompt.find("newest question") != std::string::npos);
    CHECK(a3.prompt.find("old question 0") == std::string::npos);
    CHECK(text::utf8_length(a3.prompt) <= 300 * kCharsPerToken);
    CHECK(tiny.turns.size() == 14);
    CHECK(tiny.turns[0].text == "old question 0");
  }

  TEST_CASE("mode and index errors") {
    const ragdoc::HashEmbedder e;
    MockBackend m;
    Session fql{"s", Mode::Fql, {}, 4096};
    CHECK(code_of([&] { answer_with_context(fql, "q", lake_index(e), e, m, ragdoc::TemplateSet::builtin()); }) ==
          Errc::InvalidArgument);
    Session docs{"s", Mode::Docs, {}, 4096};
    const ragdoc::ChunkIndex empty(e.id(), e.dim());
    CHECK(code_of([&] { answer_with_context(docs, "q", empty, e, m, ragdoc::TemplateSet::builtin()); }) ==
          Errc::EmptyIndex);
    CHECK(docs.turns.empty());
  }
}
