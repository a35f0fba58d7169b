#include <httplib.h>

#include <cstdlib>

#include "s3/service.hpp"

namespace s3::service {

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::optional<std::string> token;

  explicit Impl(Service& s) : service(s) {}

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <class Fn>
  void handle(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
    if (token && req.get_header_value("Authorization") != "Bearer " + *token) {
      reply(res, 401, {{"error", "Unauthorized"}, {"message", "missing or invalid bearer token"}});
      return;
    }
    try {
      reply(res, 200, fn());
    } catch (const std::exception& e) {
      reply(res, http_status(e), Service::error_body(e));
    }
  }

  static json body_json(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw Error(Errc::SchemaViolation, std::string("request body is not valid JSON: ") + e.what());
    }
  }

  void routes() {
    server.Post("/api/ask", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] { return service.ask(body_json(req)); });
    });
    server.Post("/api/fql", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] {
        const auto body = body_json(req);
        if (!body.is_object() || !body.contains("query") || !body["query"].is_string()) {
          throw Error(Errc::SchemaViolation, "'query' must be a string");
        }
        std::optional<std::filesystem::path> root;
        if (body.contains("root") && !body["root"].is_null()) {
          if (!body["root"].is_string()) throw Error(Errc::SchemaViolation, "'root' must be a string");
          root = body["root"].get<std::string>();
        }
        if (body.contains("strict") && !body["strict"].is_boolean()) {
          throw Error(Errc::SchemaViolation, "'strict' must be a boolean");
        }
        return service.fql(body["query"].get<std::string>(), root, body.value("strict", false));
      });
    });
    server.Get("/api/corpus/stats", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] { return service.stats(); });
    });
    server.Post("/api/corpus/scan", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] {
        const auto body = body_json(req);
        std::optional<std::filesystem::path> root;
        if (body.is_object() && body.contains("root") && !body["root"].is_null()) {
          if (!body["root"].is_string()) throw Error(Errc::SchemaViolation, "'root' must be a string");
          root = body["root"].get<std::string>();
        }
        return service.scan(root);
      });
    });
    server.Post("/api/ingest", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] { return service.ingest(body_json(req)); });
    });
    server.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&] { return service.session(req.matches[1]); });
    });
    if (const auto& dir = service.config().server.static_dir) {
      if (!server.set_mount_point("/", dir->string())) {
        throw Error(Errc::ConfigError, "static_dir is not a directory: " + dir->string());
      }
    }
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  if (const auto& env = service.config().server.bearer_token_env) {
    const char* v = std::getenv(env->c_str());
    if (!v || !*v) throw Error(Errc::ConfigError, "environment variable " + *env + " is not set");
    impl_->token = v;
  }
  impl_->routes();
}

HttpServer::~HttpServer() = default;

int HttpServer::bind() {
  const auto& cfg = impl_->service.config().server;
  if (cfg.port == 0) {
    const int port = impl_->server.bind_to_any_port(cfg.bind_address);
    if (port < 0) throw Error(Errc::IoError, "cannot bind " + cfg.bind_address);
    return port;
  }
  if (!impl_->server.bind_to_port(cfg.bind_address, cfg.port)) {
    throw Error(Errc::IoError, "cannot bind " + cfg.bind_address + ":" + std::to_string(cfg.port));
  }
  return cfg.port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace s3::service
