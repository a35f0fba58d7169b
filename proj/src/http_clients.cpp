#include <httplib.h>

#include <nlohmann/json.hpp>

#include "s3/error.hpp"
#include "s3/llm.hpp"
#include "s3/ragdoc.hpp"

namespace s3 {

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url, Errc errc) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(errc, "URL without scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

httplib::Result post_json(const Endpoint& ep, const nlohmann::json& body, const httplib::Headers& headers,
                          Errc errc) {
  httplib::Client client(ep.base);
  if (!client.is_valid()) throw Error(errc, "unsupported endpoint: " + ep.base);
  client.set_connection_timeout(10);
  client.set_read_timeout(300);
  return client.Post(ep.path, headers, body.dump(), "application/json");
}

}  // namespace

namespace llm {

GenericHttpBackend::GenericHttpBackend(std::string url, std::string model, std::optional<std::string> api_key,
                                       Capabilities caps)
    : url_(std::move(url)), model_(std::move(model)), api_key_(std::move(api_key)), caps_(caps) {}

std::string GenericHttpBackend::complete(const std::string& prompt, const CompletionParams& params) {
  const nlohmann::json body{
      {"model", model_},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", params.temperature},
      {"max_tokens", params.max_tokens},
  };
  httplib::Headers headers;
  if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);
  const auto res = post_json(split_url(url_, Errc::BackendError), body, headers, Errc::BackendError);
  if (!res) {
    throw Error(Errc::BackendError, "backend " + id() + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(Errc::BackendError, "backend " + id() + ": HTTP " + std::to_string(res->status));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BackendError, "backend " + id() + ": malformed response: " + e.what());
  }
}

}  // namespace llm

namespace ragdoc {

HttpEmbedder::HttpEmbedder(std::string url, std::size_t dim, std::string model_id)
    : url_(std::move(url)), dim_(dim), model_id_(std::move(model_id)) {}

std::vector<Vector> HttpEmbedder::embed_batch(std::span<const std::string> texts) const {
  const nlohmann::json body{{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  const auto res = post_json(split_url(url_, Errc::IoError), body, {}, Errc::IoError);
  if (!res) throw Error(Errc::IoError, "embedder " + id() + ": " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Error(Errc::IoError, "embedder " + id() + ": HTTP " + std::to_string(res->status));
  }
  std::vector<Vector> vectors;
  try {
    const auto j = nlohmann::json::parse(res->body);
    vectors = j.at("vectors").get<std::vector<Vector>>();
    if (j.at("dim").get<std::size_t>() != dim_) {
      throw Error(Errc::EmbedderMismatch, "embedder " + id() + " returned dim " +
                                              std::to_string(j["dim"].get<std::size_t>()));
    }
    if (j.at("model_id").get<std::string>() != model_id_) {
      throw Error(Errc::EmbedderMismatch, "embedder returned model '" + j["model_id"].get<std::string>() +
                                              "', expected '" + model_id_ + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::IoError, "embedder " + id() + ": malformed response: " + e.what());
  }
  if (vectors.size() != texts.size()) {
    throw Error(Errc::IoError, "embedder " + id() + ": expected " + std::to_string(texts.size()) + " vectors");
  }
  for (const auto& v : vectors) {
    if (v.size() != dim_) throw Error(Errc::EmbedderMismatch, "embedder " + id() + ": vector has wrong dimension");
  }
  return vectors;
}

}  // namespace ragdoc

}  // namespace s3
