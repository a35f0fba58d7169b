#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace s3::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b) noexcept;

/// Splits on every occurrence of `sep`; empty fields are kept.
std::vector<std::string_view> split(std::string_view s, std::string_view sep);

/// Splits on runs of ASCII whitespace; no empty fields.
std::vector<std::string_view> split_ws(std::string_view s);

/// Splits text into lines on '\n', stripping one trailing '\r' per line. A
/// trailing newline does not produce an empty final line.
std::vector<std::string> split_lines(std::string_view s);

/// Replaces every invalid UTF-8 sequence with U+FFFD.
std::string utf8_sanitize(std::string_view bytes);

/// Byte offsets of every code point start, plus a final entry equal to
/// `s.size()`.
std::vector<std::size_t> utf8_offsets(std::string_view s);

std::size_t utf8_length(std::string_view s) noexcept;

/// Longest prefix of at most `max_bytes` that does not split a code point.
std::string_view utf8_prefix(std::string_view s, std::size_t max_bytes) noexcept;

std::uint64_t fnv1a64(std::string_view s) noexcept;

/// Shell-style glob (`*`, `?`, `[...]`). A pattern without '/' is matched
/// against the last path component; otherwise `*` does not cross '/'.
bool glob_match(std::string_view pattern, std::string_view path);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace s3::text
