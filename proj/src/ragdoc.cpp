#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "s3/embedded_data.hpp"
#include "s3/error.hpp"
#include "s3/ragdoc.hpp"
#include "s3/text.hpp"

namespace s3::ragdoc {

using nlohmann::json;

Vector Embedder::embed(std::string_view text) const {
  const std::string t(text);
  return embed_batch(std::span<const std::string>(&t, 1)).front();
}

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(Errc::InvalidArgument, "embedding dimension must be positive");
}

std::string HashEmbedder::id() const { return "hash-bow-fnv1a-" + std::to_string(dim_); }

std::vector<std::string> HashEmbedder::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::vector<Vector> HashEmbedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    std::vector<std::size_t> counts(dim_, 0);
    for (const auto& tok : tokenize(t)) ++counts[text::fnv1a64(tok) % dim_];
    Vector v(dim_, 0.0);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      if (counts[i] == 0) continue;
      v[i] = std::log1p(static_cast<double>(counts[i]));
      norm2 += v[i] * v[i];
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& x : v) x *= inv;
    }
    out.push_back(std::move(v));
  }
  return out;
}

double cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error(Errc::EmbedderMismatch, "vector dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

ChunkIndex::ChunkIndex(std::string embedder_id, std::size_t dim)
    : embedder_id_(std::move(embedder_id)), dim_(dim) {}

void ChunkIndex::append(Chunk chunk, Vector vector) {
  if (vector.size() != dim_) {
    throw Error(Errc::EmbedderMismatch, "vector has dimension " + std::to_string(vector.size()) +
                                            ", index expects " + std::to_string(dim_));
  }
  entries_.push_back({std::move(chunk), std::move(vector)});
}

std::vector<IndexEntry> ChunkIndex::add_document(const Embedder& embedder, std::string_view doc_id,
                                                 std::string_view text, const ChunkConfig& config) {
  if (embedder.id() != embedder_id_) {
    throw Error(Errc::EmbedderMismatch,
                "index built with '" + embedder_id_ + "', got embedder '" + embedder.id() + "'");
  }
  auto chunks = chunk_document(doc_id, text, config);
  std::vector<std::string> texts;
  for (const auto& c : chunks) texts.push_back(c.text);
  auto vectors = embedder.embed_batch(texts);
  std::vector<IndexEntry> added;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    append(chunks[i], vectors[i]);
    added.push_back(entries_.back());
  }
  return added;
}

std::string to_jsonl(const IndexEntry& e, std::string_view embedder_id) {
  json j{{"doc_id", e.chunk.doc_id}, {"seq", e.chunk.seq},   {"start", e.chunk.start},
         {"end", e.chunk.end},       {"text", e.chunk.text}, {"embedder_id", embedder_id},
         {"vector", e.vector}};
  return j.dump();
}

ChunkIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open index file: " + path.string());
  std::optional<ChunkIndex> index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      const auto id = j.at("embedder_id").get<std::string>();
      auto vec = j.at("vector").get<Vector>();
      if (!index) index.emplace(id, vec.size());
      if (id != index->embedder_id()) {
        throw Error(Errc::EmbedderMismatch, "mixed embedders in " + path.string(), line_no);
      }
      Chunk c{j.at("doc_id").get<std::string>(), j.at("seq").get<std::size_t>(),
              j.at("text").get<std::string>(), j.at("start").get<std::size_t>(),
              j.at("end").get<std::size_t>()};
      index->append(std::move(c), std::move(vec));
    } catch (const json::exception& e) {
      throw Error(Errc::IoError,
                  path.string() + ":" + std::to_string(line_no) + ": bad index entry: " + e.what(), line_no);
    }
  }
  if (!index) throw Error(Errc::EmptyIndex, "index file has no entries: " + path.string());
  return std::move(*index);
}

void append_index_file(const std::filesystem::path& path, std::span<const IndexEntry> entries,
                       std::string_view embedder_id) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(Errc::IoError, "cannot write index file: " + path.string());
  for (const auto& e : entries) out << to_jsonl(e, embedder_id) << '\n';
  out.flush();
  if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

RetrievedContext retrieve(const ChunkIndex& index, const Embedder& embedder, std::string_view query,
                          std::size_t k) {
  if (k == 0) throw Error(Errc::InvalidArgument, "k must be at least 1");
  if (index.empty()) throw Error(Errc::EmptyIndex, "index is empty");
  if (embedder.id() != index.embedder_id()) {
    throw Error(Errc::EmbedderMismatch,
                "index built with '" + index.embedder_id() + "', query embedder is '" + embedder.id() + "'");
  }
  const auto q = embedder.embed(query);
  std::vector<std::pair<double, const IndexEntry*>> scored;
  scored.reserve(index.size());
  for (const auto& e : index.entries()) scored.emplace_back(cosine(q, e.vector), &e);

  const auto take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      if (a.second->chunk.doc_id != b.second->chunk.doc_id) {
                        return a.second->chunk.doc_id < b.second->chunk.doc_id;
                      }
                      return a.second->chunk.seq < b.second->chunk.seq;
                    });
  RetrievedContext ctx;
  ctx.query = std::string(query);
  for (std::size_t i = 0; i < take; ++i) ctx.items.push_back({scored[i].second->chunk, scored[i].first});
  return ctx;
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kNoContextMarker = "@@no_context@@";

std::string render(std::string_view body, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < body.size()) {
    const auto open = body.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = body.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const auto name = body.substr(open + 2, close - open - 2);
    out.append(body.substr(pos, open - pos));
    if (auto it = values.find(std::string(name)); it != values.end()) {
      out += it->second;
    } else {
      out.append(body.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(body.substr(pos));
  return out;
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string id, std::string_view file_text) {
  PromptTemplate t;
  t.id = std::move(id);
  const auto marker = file_text.find(kNoContextMarker);
  if (marker == std::string_view::npos) {
    t.body = std::string(file_text);
    return t;
  }
  t.body = std::string(file_text.substr(0, marker));
  auto rest = file_text.substr(marker + kNoContextMarker.size());
  if (!rest.empty() && rest.front() == '\n') rest.remove_prefix(1);
  t.no_context = std::string(text::trim(rest));
  return t;
}

TemplateSet TemplateSet::builtin() {
  TemplateSet set;
  constexpr std::string_view prefix = "templates/";
  for (const auto& [name, content] : data::files()) {
    if (name.substr(0, prefix.size()) != prefix) continue;
    auto stem = name.substr(prefix.size());
    stem = stem.substr(0, stem.rfind('.'));
    set.add(PromptTemplate::parse(std::string(stem), content));
  }
  return set;
}

TemplateSet TemplateSet::from_directory(const std::filesystem::path& dir) {
  auto set = builtin();
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(Errc::IoError, "template directory not found: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    set.add(PromptTemplate::parse(entry.path().stem().string(), content));
  }
  return set;
}

void TemplateSet::add(PromptTemplate t) {
  auto id = t.id;
  templates_[id] = std::move(t);
}

bool TemplateSet::contains(std::string_view id) const { return templates_.find(id) != templates_.end(); }

const PromptTemplate& TemplateSet::get(std::string_view id) const {
  const auto it = templates_.find(id);
  if (it == templates_.end()) throw Error(Errc::TemplateNotFound, "prompt template not found: " + std::string(id));
  return it->second;
}

std::string render_context_item(const Chunk& chunk) { return chunk.marker() + "\n" + chunk.text + "\n"; }

AssembledPrompt assemble_prompt(const TemplateSet& templates, std::string_view template_id,
                                std::string_view query, const RetrievedContext& context,
                                std::size_t budget_chars, const std::map<std::string, std::string>& extra) {
  const auto& tpl = templates.get(template_id);
  auto values = extra;
  values["query"] = std::string(query);

  AssembledPrompt result;
  if (context.items.empty()) {
    values["context"] = tpl.no_context;
    result.text = render(tpl.body, values);
    if (text::utf8_length(result.text) > budget_chars) {
      throw Error(Errc::BudgetTooSmall, "prompt budget of " + std::to_string(budget_chars) +
                                            " characters cannot hold the query");
    }
    return result;
  }

  values["context"] = "";
  const auto fixed = text::utf8_length(render(tpl.body, values));
  std::string ctx;
  std::size_t ctx_len = 0;
  for (const auto& item : context.items) {
    const auto block = (ctx.empty() ? "" : "\n") + render_context_item(item.chunk);
    const auto block_len = text::utf8_length(block);
    if (fixed + ctx_len + block_len > budget_chars) break;
    ctx += block;
    ctx_len += block_len;
    result.included.emplace_back(item.chunk.doc_id, item.chunk.seq);
  }
  if (result.included.empty()) {
    throw Error(Errc::BudgetTooSmall, "prompt budget of " + std::to_string(budget_chars) +
                                          " characters cannot hold the query and one context chunk");
  }
  values["context"] = ctx;
  result.text = render(tpl.body, values);
  return result;
}

}  // namespace s3::ragdoc
