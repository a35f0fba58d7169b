// s3: command line front end for the service core.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "s3/json_io.hpp"
#include "s3/metadata.hpp"
#include "s3/service.hpp"

namespace {

using nlohmann::json;
using namespace s3;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitIo = 2;
constexpr int kExitSyntax = 3;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(const Error& e) {
  switch (e.code()) {
    case Errc::SyntaxError:
    case Errc::EmptyPattern:
    case Errc::BadVersionTag:
      return kExitSyntax;
    case Errc::RootNotFound:
    case Errc::PermissionDenied:
    case Errc::IoError:
      return kExitIo;
    case Errc::SchemaViolation:
      return kExitUsage;
    default:
      return kExitOther;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string file_stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

void print_stats(const json& st) {
  std::cout << std::left << std::setw(10) << "Language" << std::right << std::setw(8) << "Files" << std::setw(12)
            << "Lines" << '\n';
  for (const auto& [lang, t] : st["languages"].items()) {
    std::cout << std::left << std::setw(10) << lang << std::right << std::setw(8) << t["files"].get<std::size_t>()
              << std::setw(12) << t["lines"].get<std::size_t>() << '\n';
  }
  std::cout << std::left << std::setw(10) << "Total" << std::right << std::setw(8) << st["files"].get<std::size_t>()
            << std::setw(12) << st["lines"].get<std::size_t>() << '\n';
  if (!st["excluded"].empty()) std::cout << "excluded: " << st["excluded"].size() << " path(s)\n";
}

void print_hits(const json& hits, const std::string& indent) {
  for (const auto& h : hits) {
    std::cout << indent << h["file"].get<std::string>() << ':' << h["line"].get<std::size_t>() << ": "
              << h["excerpt"].get<std::string>() << '\n';
  }
}

void print_report(const json& r) {
  std::cout << r["query"].get<std::string>() << '\n';
  const auto type = r["type"].get<std::string>();
  if (type == "check") {
    std::cout << "matched: " << (r["matched"].get<bool>() ? "yes" : "no") << " (" << r["hits"].size() << " hits)\n";
    print_hits(r["hits"], "  ");
  } else if (type == "max") {
    if (r["winner"].is_null()) {
      std::cout << "winner: none\n";
    } else {
      std::cout << "winner: " << r["winner"]["tag"].get<std::string>() << '\n';
      print_hits(r["winner"]["hits"], "  ");
    }
  } else {
    for (const auto& e : r["entries"]) {
      std::cout << e["tag"].get<std::string>() << ": " << (e["matched"].get<bool>() ? "yes" : "no") << " ("
                << e["hit_count"].get<std::size_t>() << " hits)\n";
    }
  }
}

void print_table(const metadata::Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) std::cout << (i ? " | " : "") << t.columns[i];
  std::cout << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) std::cout << (i ? " | " : "") << row[i];
    std::cout << '\n';
  }
}

service::Config load(const std::string& config_path) {
  if (!config_path.empty()) return service::load_config(config_path);
  return service::parse_config(json::object(), std::filesystem::current_path());
}

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Source code exploration: FQL feature queries, metadata and document Q&A"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);

  auto* scan = app.add_subcommand("scan", "Scan a source tree and print language statistics");
  std::string scan_root;
  bool scan_json = false;
  scan->add_option("root", scan_root, "Source tree")->required();
  scan->add_flag("--json", scan_json, "Print JSON");

  auto* fql = app.add_subcommand("fql", "Execute an FQL query");
  std::string fql_query, fql_root;
  bool fql_strict = false, fql_json = false;
  fql->add_option("query", fql_query, "FQL query text")->required();
  fql->add_option("--root", fql_root, "Source tree (defaults to the configured corpus)");
  fql->add_flag("--strict", fql_strict, "Reject anything outside the strict grammar");
  fql->add_flag("--json", fql_json, "Print the FeatureReport as JSON");

  auto* ask = app.add_subcommand("ask", "Ask a question through the LLM pipeline");
  std::string ask_question, ask_mode, ask_session, ask_corpus;
  bool ask_json = false;
  ask->add_option("question", ask_question, "Question")->required();
  ask->add_option("--mode", ask_mode, "Pipeline")->required()->check(CLI::IsMember({"fql", "metadata", "docs"}));
  ask->add_option("--session", ask_session, "Continue an existing session");
  ask->add_option("--corpus", ask_corpus, "Document corpus for docs mode");
  ask->add_flag("--json", ask_json, "Print the full response as JSON");

  auto* ingest = app.add_subcommand("ingest", "Chunk, embed and index text documents");
  std::vector<std::string> ingest_files;
  std::string ingest_corpus = "default";
  ingest->add_option("files", ingest_files, "Text files")->required()->check(CLI::ExistingFile);
  ingest->add_option("--corpus", ingest_corpus, "Corpus name");

  auto* meta = app.add_subcommand("meta", "Query code metadata files");
  meta->require_subcommand(1);
  bool meta_json = false;

  auto* dot = meta->add_subcommand("dot", "Call graphs in DOT format");
  dot->add_flag("--json", meta_json, "Print JSON");
  std::string dot_file, dot_action, dot_name;
  dot->add_option("file", dot_file, "DOT file")->required();
  dot->add_option("action", dot_action, "modules | edges | callers | callees")
      ->required()
      ->check(CLI::IsMember({"modules", "edges", "callers", "callees"}));
  dot->add_option("name", dot_name, "module::function for callers/callees");

  auto* csv = meta->add_subcommand("csv", "CSV tables");
  csv->add_flag("--json", meta_json, "Print JSON");
  std::vector<std::string> csv_args;
  std::vector<std::string> csv_keys;
  csv->add_option("args", csv_args, "<[name=]file...> show|sql|query [SELECT ...]")->required();
  csv->add_option("--key", csv_keys, "Primary key as table=column")->allow_extra_args(false);

  auto* spel = meta->add_subcommand("spel", "Loop-variable matrices");
  spel->add_flag("--json", meta_json, "Print JSON");
  std::string spel_file, spel_action;
  std::vector<std::size_t> spel_loop;
  spel->add_option("file", spel_file, "Matrix file")->required();
  spel->add_option("action", spel_action, "sections | loop")
      ->required()
      ->check(CLI::IsMember({"sections", "loop"}));
  spel->add_option("indices", spel_loop, "section and loop index for 'loop'");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  int serve_port = -1;
  serve->add_option("--port", serve_port, "Override the configured port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*scan) {
      auto cfg = load(config_path);
      service::Service svc(std::move(cfg));
      const auto st = svc.scan(std::filesystem::path(scan_root));
      scan_json ? print_json(st) : print_stats(st);
    } else if (*fql) {
      service::Service svc(load(config_path));
      std::optional<std::filesystem::path> root;
      if (!fql_root.empty()) root = fql_root;
      const auto report = svc.fql(fql_query, root, fql_strict);
      fql_json ? print_json(report) : print_report(report);
    } else if (*ask) {
      service::Service svc(load(config_path));
      json req{{"question", ask_question}, {"mode", ask_mode}};
      if (!ask_session.empty()) req["session_id"] = ask_session;
      if (!ask_corpus.empty()) req["corpus"] = ask_corpus;
      const auto res = svc.ask(req);
      if (ask_json) {
        print_json(res);
      } else {
        std::cout << res["answer"].get<std::string>() << "\n\n";
        print_json(res["artifact"]);
        std::cout << "session: " << res["session_id"].get<std::string>() << '\n';
      }
    } else if (*ingest) {
      service::Service svc(load(config_path));
      json docs = json::array();
      for (const auto& f : ingest_files) {
        docs.push_back({{"doc_id", std::filesystem::path(f).filename().string()}, {"text", read_file(f)}});
      }
      print_json(svc.ingest({{"corpus", ingest_corpus}, {"documents", docs}}));
    } else if (*dot) {
      const auto graph = metadata::parse_dot(read_file(dot_file));
      json out;
      if (dot_action == "modules") {
        out = metadata::unique_modules(graph);
      } else if (dot_action == "edges") {
        out = json_io::to_json(graph)["edges"];
      } else {
        if (dot_name.empty()) throw UsageError(dot_action + " needs a module::function name");
        const auto names = dot_action == "callers" ? metadata::callers(graph, dot_name)
                                                   : metadata::callees(graph, dot_name);
        out = json::array();
        for (const auto& n : names) out.push_back(n.raw);
      }
      if (meta_json) {
        print_json(out);
      } else {
        for (const auto& item : out) {
          if (item.is_array()) {
            std::cout << item[0].get<std::string>() << " -> " << item[1].get<std::string>() << '\n';
          } else {
            std::cout << item.get<std::string>() << '\n';
          }
        }
      }
    } else if (*csv) {
      std::map<std::string, std::string> keys;
      for (const auto& k : csv_keys) {
        const auto eq = k.find('=');
        if (eq == std::string::npos) throw UsageError("--key expects table=column");
        keys[k.substr(0, eq)] = k.substr(eq + 1);
      }
      std::size_t action_at = 0;
      while (action_at < csv_args.size() && csv_args[action_at] != "show" && csv_args[action_at] != "sql" &&
             csv_args[action_at] != "query") {
        ++action_at;
      }
      if (action_at == 0 || action_at == csv_args.size()) {
        throw UsageError("usage: s3 meta csv <[name=]file...> show|sql|query [SELECT ...]");
      }
      metadata::TableCatalog catalog;
      for (std::size_t i = 0; i < action_at; ++i) {
        auto name = file_stem(csv_args[i]);
        auto path = csv_args[i];
        if (const auto eq = path.find('='); eq != std::string::npos && !std::filesystem::exists(path)) {
          name = path.substr(0, eq);
          path = path.substr(eq + 1);
        }
        std::optional<std::string> pk;
        if (auto it = keys.find(name); it != keys.end()) pk = it->second;
        catalog.push_back(metadata::load_csv(name, read_file(path), pk));
      }
      const auto& action = csv_args[action_at];
      if (action == "query") {
        if (action_at + 2 != csv_args.size()) throw UsageError("query expects one SELECT statement");
        const auto plan = metadata::parse_select(csv_args[action_at + 1]);
        const auto result = metadata::query_tables(catalog, plan);
        meta_json ? print_json(json_io::to_json(result)) : print_table(result);
      } else if (action_at + 1 != csv_args.size()) {
        throw UsageError(action + " takes no further arguments");
      } else if (action == "sql") {
        for (const auto& t : catalog) std::cout << metadata::render_sql(t) << '\n';
      } else if (meta_json) {
        json out = json::array();
        for (const auto& t : catalog) out.push_back(json_io::to_json(t));
        print_json(out);
      } else {
        for (const auto& t : catalog) {
          std::cout << "# " << t.name << '\n';
          print_table(t);
        }
      }
    } else if (*spel) {
      const auto matrix = metadata::parse_loop_matrix(read_file(spel_file));
      if (spel_action == "sections") {
        if (meta_json) {
          print_json(json_io::to_json(matrix)["sections"]);
        } else {
          for (const auto& s : matrix.sections) std::cout << s.label << ": " << s.loop_count << " loops\n";
        }
      } else {
        if (spel_loop.size() != 2) throw UsageError("loop expects <section> <loop>");
        const auto uses = metadata::loop_usage(matrix, spel_loop[0], spel_loop[1]);
        if (meta_json) {
          print_json(json_io::to_json(uses));
        } else {
          for (const auto& u : uses) std::cout << u.variable << ' ' << metadata::role_name(u.role) << '\n';
        }
      }
    } else if (*serve) {
      auto cfg = load(config_path);
      if (serve_port >= 0) cfg.server.port = serve_port;
      service::Service svc(std::move(cfg));
      service::HttpServer server(svc);
      const auto port = server.bind();
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << svc.config().server.bind_address << ':' << port << std::endl;
      server.listen();
      g_server = nullptr;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SyntaxError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSyntax;
  } catch (const Error& e) {
    std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOk;
}
