#include <fstream>
#include <random>

#include "s3/json_io.hpp"
#include "s3/service.hpp"
#include "s3/text.hpp"

namespace s3::service {

namespace {

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string random_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

}  // namespace

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path SessionStore::path_for(const std::string& id) const { return dir_ / (id + ".jsonl"); }

std::string SessionStore::header_line(const llm::Session& session) {
  return json{{"type", "session"},
              {"id", session.id},
              {"mode", std::string(llm::mode_name(session.mode))},
              {"token_budget", session.token_budget}}
      .dump();
}

std::string SessionStore::turn_line(const llm::Turn& turn) {
  auto j = json_io::to_json(turn);
  j["type"] = "turn";
  return j.dump();
}

llm::Session SessionStore::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::UnknownSession, "unknown session: " + path.stem().string());
  llm::Session session;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      const auto j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (line_no == 1) {
        if (type != "session") throw Error(Errc::IoError, "missing session header", line_no);
        session.id = j.at("id").get<std::string>();
        const auto mode = llm::mode_from_name(j.at("mode").get<std::string>());
        if (!mode) throw Error(Errc::IoError, "bad session mode", line_no);
        session.mode = *mode;
        session.token_budget = j.at("token_budget").get<std::size_t>();
        continue;
      }
      if (type != "turn") throw Error(Errc::IoError, "unexpected record type '" + type + "'", line_no);
      llm::Turn t;
      const auto role = j.at("role").get<std::string>();
      if (role != "user" && role != "assistant") throw Error(Errc::IoError, "bad role '" + role + "'", line_no);
      t.role = role == "user" ? llm::Turn::Role::User : llm::Turn::Role::Assistant;
      t.text = j.at("text").get<std::string>();
      t.artifacts = j.value("artifacts", json(nullptr));
      session.turns.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw Error(Errc::IoError, path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  if (line_no == 0) throw Error(Errc::IoError, "empty session file: " + path.string());
  return session;
}

llm::Session SessionStore::create(llm::Mode mode, std::size_t token_budget) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  auto s = std::make_shared<Slot>();
  s->session.mode = mode;
  s->session.token_budget = token_budget;
  std::lock_guard lock(mu_);
  do {
    s->session.id = random_id();
  } while (slots_.count(s->session.id) || std::filesystem::exists(path_for(s->session.id)));
  std::ofstream out(path_for(s->session.id), std::ios::binary);
  out << header_line(s->session) << '\n';
  if (!out) throw Error(Errc::IoError, "cannot write session file in " + dir_.string());
  slots_[s->session.id] = s;
  return s->session;
}

std::shared_ptr<SessionStore::Slot> SessionStore::slot(const std::string& id) {
  if (!valid_id(id)) throw Error(Errc::UnknownSession, "unknown session: " + id);
  std::lock_guard lock(mu_);
  if (auto it = slots_.find(id); it != slots_.end()) return it->second;
  const auto path = path_for(id);
  if (!std::filesystem::exists(path)) throw Error(Errc::UnknownSession, "unknown session: " + id);
  auto s = std::make_shared<Slot>();
  s->session = parse_file(path);
  slots_[id] = s;
  return s;
}

llm::Session SessionStore::get(const std::string& id) {
  auto s = slot(id);
  std::lock_guard lock(s->mu);
  return s->session;
}

void SessionStore::append_turns(const llm::Session& session, std::size_t from) {
  if (from >= session.turns.size()) return;
  std::ofstream out(path_for(session.id), std::ios::binary | std::ios::app);
  for (std::size_t i = from; i < session.turns.size(); ++i) out << turn_line(session.turns[i]) << '\n';
  out.flush();
  if (!out) throw Error(Errc::IoError, "cannot append to session " + session.id);
}

}  // namespace s3::service
