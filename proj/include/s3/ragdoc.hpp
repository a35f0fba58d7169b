#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace s3::ragdoc {

struct ChunkConfig {
  std::size_t max_chunk_chars = 1000;
  std::size_t overlap_chars = 150;
};

/// A window of a source document. `start`/`end` are byte offsets into the
/// document; lengths and overlaps are counted in code points.
struct Chunk {
  std::string doc_id;
  std::size_t seq = 0;
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  std::string marker() const { return "[" + doc_id + "#" + std::to_string(seq) + "]"; }

  bool operator==(const Chunk&) const = default;
};

/// Greedy windows of at most max_chunk_chars code points. A window that does
/// not reach the end of the document is cut back to the last paragraph
/// break ("\n\n"), or failing that the last sentence break (". "), inside its
/// final 20%. The next window starts exactly overlap_chars before the cut.
/// Throws Errc::EmptyDocument for empty text, Errc::InvalidArgument when
/// overlap >= max.
std::vector<Chunk> chunk_document(std::string_view doc_id, std::string_view text,
                                  const ChunkConfig& config = {});

using Vector = std::vector<double>;

inline constexpr std::size_t kDefaultDim = 1024;

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<Vector> embed_batch(std::span<const std::string> texts) const = 0;

  Vector embed(std::string_view text) const;
};

/// Hashed bag of words: lowercase, split on non-alphanumerics (bytes >= 0x80
/// count as word characters), FNV-1a 64 into `dim` buckets, weight
/// ln(1 + count), L2 normalized. Text without tokens embeds to zeros.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = kDefaultDim);
  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  std::vector<Vector> embed_batch(std::span<const std::string> texts) const override;

  static std::vector<std::string> tokenize(std::string_view text);

 private:
  std::size_t dim_;
};

/// External embedding service: POST {"texts": [...]} ->
/// {"vectors": [[...]], "dim": n, "model_id": "..."}.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(std::string url, std::size_t dim, std::string model_id = "http");
  std::string id() const override { return "http:" + model_id_; }
  std::size_t dim() const override { return dim_; }
  std::vector<Vector> embed_batch(std::span<const std::string> texts) const override;

 private:
  std::string url_;
  std::size_t dim_;
  std::string model_id_;
};

double cosine(const Vector& a, const Vector& b);

struct IndexEntry {
  Chunk chunk;
  Vector vector;

  bool operator==(const IndexEntry&) const = default;
};

/// Append-only collection of embedded chunks sharing one embedder and
/// dimension.
class ChunkIndex {
 public:
  ChunkIndex(std::string embedder_id, std::size_t dim);

  const std::string& embedder_id() const noexcept { return embedder_id_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  void append(Chunk chunk, Vector vector);

  /// Chunks and embeds with `embedder`, appends, and returns the new entries.
  std::vector<IndexEntry> add_document(const Embedder& embedder, std::string_view doc_id,
                                       std::string_view text, const ChunkConfig& config = {});

  bool operator==(const ChunkIndex&) const = default;

 private:
  std::string embedder_id_;
  std::size_t dim_;
  std::vector<IndexEntry> entries_;
};

/// One JSON object per line: doc_id, seq, start, end, text, embedder_id, vector.
std::string to_jsonl(const IndexEntry& entry, std::string_view embedder_id);
ChunkIndex load_index(const std::filesystem::path& path);
void append_index_file(const std::filesystem::path& path, std::span<const IndexEntry> entries,
                       std::string_view embedder_id);

struct Scored {
  Chunk chunk;
  double score = 0.0;
};

struct RetrievedContext {
  std::string query;
  std::vector<Scored> items;
};

/// Exact cosine against every entry; top-k by score, ties by (doc_id, seq).
/// Throws Errc::EmptyIndex, Errc::EmbedderMismatch, Errc::InvalidArgument (k=0).
RetrievedContext retrieve(const ChunkIndex& index, const Embedder& embedder, std::string_view query,
                          std::size_t k);

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

/// Body with {{name}} placeholders. `{{context}}` receives the retrieved
/// chunks, or `no_context` when there are none.
struct PromptTemplate {
  std::string id;
  std::string body;
  std::string no_context;

  /// Template file: the body, optionally followed by a line "@@no_context@@"
  /// and the clause used when the context is empty.
  static PromptTemplate parse(std::string id, std::string_view file_text);
};

class TemplateSet {
 public:
  /// Templates compiled into the library.
  static TemplateSet builtin();
  /// Builtins overridden by every *.txt file in `dir` (id = file stem).
  static TemplateSet from_directory(const std::filesystem::path& dir);

  void add(PromptTemplate t);
  const PromptTemplate& get(std::string_view id) const;  // Errc::TemplateNotFound
  bool contains(std::string_view id) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

struct AssembledPrompt {
  std::string text;
  std::vector<std::pair<std::string, std::size_t>> included;  // (doc_id, seq), score order
};

/// Fills `{{query}}`, `{{context}}` and any `extra` placeholders. Context
/// items are added whole, in score order, while the prompt stays within
/// `budget_chars` code points; the first item that does not fit ends the
/// context. Throws Errc::BudgetTooSmall when the query and the first item (or
/// the query alone, for an empty context) do not fit.
AssembledPrompt assemble_prompt(const TemplateSet& templates, std::string_view template_id,
                                std::string_view query, const RetrievedContext& context,
                                std::size_t budget_chars,
                                const std::map<std::string, std::string>& extra = {});

std::string render_context_item(const Chunk& chunk);

}  // namespace s3::ragdoc
