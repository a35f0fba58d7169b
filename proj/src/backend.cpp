#include <cstdio>
#include <fstream>
#include <regex>

#include "s3/error.hpp"
#include "s3/llm.hpp"
#include "s3/text.hpp"

namespace s3::llm {

std::size_t estimate_tokens(std::string_view text) noexcept {
  return (text::utf8_length(text) + kCharsPerToken - 1) / kCharsPerToken;
}

MockBackend::MockBackend(Unscripted unscripted, Capabilities caps, std::string id)
    : unscripted_(unscripted), caps_(caps), id_(std::move(id)) {}

std::string MockBackend::fingerprint(std::string_view prompt) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(text::fnv1a64(prompt)));
  return buf;
}

void MockBackend::script(std::string response) {
  std::lock_guard lock(mu_);
  queue_.push_back(std::move(response));
}

void MockBackend::on_fingerprint(std::string fp, std::string response) {
  std::lock_guard lock(mu_);
  by_fingerprint_.emplace_back(std::move(fp), std::move(response));
}

void MockBackend::on_contains(std::string needle, std::string response) {
  std::lock_guard lock(mu_);
  by_contains_.emplace_back(std::move(needle), std::move(response));
}

void MockBackend::fail_next(std::string message) {
  std::lock_guard lock(mu_);
  failures_.push_back(std::move(message));
}

void MockBackend::load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ConfigError, "cannot open mock script: " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto response = j.at("response").get<std::string>();
      if (j.contains("fingerprint")) {
        on_fingerprint(j["fingerprint"].get<std::string>(), std::move(response));
      } else if (j.contains("contains")) {
        on_contains(j["contains"].get<std::string>(), std::move(response));
      } else {
        script(std::move(response));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ConfigError, path.string() + ":" + std::to_string(n) + ": " + e.what(), n);
    }
  }
}

std::vector<std::string> MockBackend::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

namespace {

std::string echo_context(const std::string& prompt) {
  static const std::regex marker(R"(^\[[^\]\n]+#\d+\]$)");
  const auto lines = text::split_lines(prompt);
  std::size_t i = 0;
  while (i < lines.size() && text::trim(lines[i]) != "### Context") ++i;
  for (; i < lines.size(); ++i) {
    if (!std::regex_match(lines[i], marker)) continue;
    std::string passage;
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      if (std::regex_match(lines[j], marker) || lines[j].rfind("### ", 0) == 0) break;
      if (!passage.empty()) passage += "\n";
      passage += lines[j];
    }
    return lines[i] + " " + std::string(text::trim(passage));
  }
  return "";
}

}  // namespace

std::string MockBackend::complete(const std::string& prompt, const CompletionParams&) {
  std::lock_guard lock(mu_);
  prompts_.push_back(prompt);
  if (!failures_.empty()) {
    auto msg = std::move(failures_.front());
    failures_.pop_front();
    throw Error(Errc::BackendError, "backend " + id_ + ": " + msg);
  }
  const auto fp = fingerprint(prompt);
  for (const auto& [key, response] : by_fingerprint_) {
    if (key == fp) return response;
  }
  for (const auto& [needle, response] : by_contains_) {
    if (prompt.find(needle) != std::string::npos) return response;
  }
  if (!queue_.empty()) {
    auto r = std::move(queue_.front());
    queue_.pop_front();
    return r;
  }
  return unscripted_ == Unscripted::EchoContext ? echo_context(prompt) : std::string();
}

}  // namespace s3::llm
