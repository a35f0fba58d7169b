#include <algorithm>

#include "s3/error.hpp"
#include "s3/ragdoc.hpp"
#include "s3/text.hpp"

namespace s3::ragdoc {

namespace {

// Last occurrence of `delim` whose end falls in [lo_byte, hi_byte], as the
// byte offset just past the delimiter.
std::optional<std::size_t> last_break(std::string_view text, std::string_view delim, std::size_t lo_byte,
                                      std::size_t hi_byte) {
  if (hi_byte < delim.size()) return std::nullopt;
  auto pos = text.rfind(delim, hi_byte - delim.size());
  while (pos != std::string_view::npos) {
    const auto after = pos + delim.size();
    if (after < lo_byte) return std::nullopt;
    if (after <= hi_byte) return after;
    if (pos == 0) break;
    pos = text.rfind(delim, pos - 1);
  }
  return std::nullopt;
}

}  // namespace

std::vector<Chunk> chunk_document(std::string_view doc_id, std::string_view text, const ChunkConfig& config) {
  if (text.empty()) throw Error(Errc::EmptyDocument, "document '" + std::string(doc_id) + "' is empty");
  if (config.max_chunk_chars == 0 || config.overlap_chars >= config.max_chunk_chars) {
    throw Error(Errc::InvalidArgument, "chunk overlap must be smaller than the chunk size");
  }
  const auto offs = text::utf8_offsets(text);
  const std::size_t n = offs.size() - 1;
  const std::size_t max = config.max_chunk_chars;
  const std::size_t overlap = config.overlap_chars;

  auto cp_at = [&](std::size_t byte) {
    return static_cast<std::size_t>(std::lower_bound(offs.begin(), offs.end(), byte) - offs.begin());
  };

  std::vector<Chunk> chunks;
  std::size_t start = 0;
  while (true) {
    std::size_t cut = n;
    if (n - start > max) {
      const std::size_t end = start + max;
      const std::size_t lo = std::max(end - max / 5, start + overlap + 1);
      cut = end;
      if (lo <= end) {
        auto br = last_break(text, "\n\n", offs[lo], offs[end]);
        if (!br) br = last_break(text, ". ", offs[lo], offs[end]);
        if (br) cut = cp_at(*br);
      }
    }
    Chunk c;
    c.doc_id = std::string(doc_id);
    c.seq = chunks.size();
    c.start = offs[start];
    c.end = offs[cut];
    c.text = std::string(text.substr(c.start, c.end - c.start));
    chunks.push_back(std::move(c));
    if (cut == n) break;
    start = cut - overlap;
  }
  return chunks;
}

}  // namespace s3::ragdoc
