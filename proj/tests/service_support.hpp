#pragma once

#include <httplib.h>

#include <cstdio>
#include <thread>

#include "s3/service.hpp"
#include "support.hpp"

namespace s3::testing {

/// Service plus HTTP server on a free loopback port, torn down on scope exit.
class LiveServer {
 public:
  explicit LiveServer(service::Service& svc) : server_(svc) {
    port_ = server_.bind();
    thread_ = std::thread([this] { server_.listen(); });
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }
  int port() const { return port_; }

 private:
  service::HttpServer server_;
  int port_ = 0;
  std::thread thread_;
};

struct CommandResult {
  int status = -1;
  std::string out;
};

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* p = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

inline CommandResult run_cli(const std::vector<std::string>& args) {
  std::string cmd = shell_quote(S3_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  return run_command(cmd);
}

inline std::string session_file_from_memory(const llm::Session& s) {
  std::string out = service::SessionStore::header_line(s) + "\n";
  for (const auto& t : s.turns) out += service::SessionStore::turn_line(t) + "\n";
  return out;
}

}  // namespace s3::testing
