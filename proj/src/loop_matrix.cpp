#include <set>

#include "s3/error.hpp"
#include "s3/metadata.hpp"
#include "s3/text.hpp"

namespace s3::metadata {

namespace {

// Splits a matrix row on '|' and drops the empty field after a trailing '|'.
std::vector<std::string_view> segments(std::string_view line) {
  auto parts = text::split(line, "|");
  if (parts.size() > 1 && text::trim(parts.back()).empty()) parts.pop_back();
  return parts;
}

AccessRole parse_role(std::string_view token, std::size_t line) {
  if (token == "ro") return AccessRole::ReadOnly;
  if (token == "wo") return AccessRole::WriteOnly;
  if (token == "rw") return AccessRole::ReadWrite;
  if (token == "-") return AccessRole::Unused;
  throw Error(Errc::UnknownRole,
              "unknown access role '" + std::string(token) + "' on line " + std::to_string(line), line);
}

}  // namespace

std::string_view role_token(AccessRole role) noexcept {
  switch (role) {
    case AccessRole::ReadOnly: return "ro";
    case AccessRole::WriteOnly: return "wo";
    case AccessRole::ReadWrite: return "rw";
    case AccessRole::Unused: return "-";
  }
  return "-";
}

std::string_view role_name(AccessRole role) noexcept {
  switch (role) {
    case AccessRole::ReadOnly: return "ReadOnly";
    case AccessRole::WriteOnly: return "WriteOnly";
    case AccessRole::ReadWrite: return "ReadWrite";
    case AccessRole::Unused: return "Unused";
  }
  return "Unused";
}

std::size_t LoopMatrix::total_loops() const {
  std::size_t n = 0;
  for (const auto& s : sections) n += s.loop_count;
  return n;
}

std::size_t LoopMatrix::column(std::size_t section, std::size_t loop) const {
  if (section >= sections.size()) {
    throw Error(Errc::IndexOutOfRange, "section index " + std::to_string(section) + " out of range (" +
                                           std::to_string(sections.size()) + " sections)");
  }
  if (loop >= sections[section].loop_count) {
    throw Error(Errc::IndexOutOfRange, "loop index " + std::to_string(loop) + " out of range (section " +
                                           std::to_string(section) + " has " +
                                           std::to_string(sections[section].loop_count) + " loops)");
  }
  std::size_t col = loop;
  for (std::size_t s = 0; s < section; ++s) col += sections[s].loop_count;
  return col;
}

LoopMatrix parse_loop_matrix(std::string_view text) {
  const auto lines = text::split_lines(text);
  std::size_t n = 0;
  while (n < lines.size() && text::trim(lines[n]).empty()) ++n;
  if (n == lines.size()) throw Error(Errc::RaggedMatrix, "empty loop matrix", 1);
  const auto header_line = n + 1;
  const auto header = segments(lines[n]);
  if (header.size() < 2) {
    throw Error(Errc::RaggedMatrix, "header has no '|' separated sections", header_line);
  }

  LoopMatrix m;
  std::set<std::string> seen;
  bool first = true;
  for (++n; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    const auto line_no = n + 1;
    const auto parts = segments(lines[n]);
    if (parts.size() < 2) throw Error(Errc::RaggedMatrix, "row has no '|' separated cells", line_no);
    const std::string name(text::trim(parts[0]));
    if (name.empty()) throw Error(Errc::RaggedMatrix, "row without a variable name", line_no);
    if (!seen.insert(name).second) {
      throw Error(Errc::DuplicateVariable, "duplicate variable '" + name + "'", line_no);
    }

    if (first) {
      const auto section_count = parts.size() - 1;
      if (header.size() - 1 > section_count) {
        throw Error(Errc::RaggedMatrix, "header names more sections than the first row has", header_line);
      }
      for (std::size_t s = 0; s < section_count; ++s) {
        const auto width = text::split_ws(parts[s + 1]).size();
        if (width == 0) throw Error(Errc::RaggedMatrix, "empty section in first row", line_no);
        std::string label;
        if (s + 1 < header.size()) label = std::string(text::trim(header[s + 1]));
        if (label.empty()) label = "section" + std::to_string(s);
        m.sections.push_back({std::move(label), width});
      }
      first = false;
    }

    if (parts.size() - 1 != m.sections.size()) {
      throw Error(Errc::RaggedMatrix,
                  "row has " + std::to_string(parts.size() - 1) + " sections, expected " +
                      std::to_string(m.sections.size()),
                  line_no);
    }
    std::vector<AccessRole> row;
    for (std::size_t s = 0; s < m.sections.size(); ++s) {
      const auto tokens = text::split_ws(parts[s + 1]);
      if (tokens.size() != m.sections[s].loop_count) {
        throw Error(Errc::RaggedMatrix,
                    "section " + std::to_string(s) + " has " + std::to_string(tokens.size()) +
                        " cells, expected " + std::to_string(m.sections[s].loop_count),
                    line_no);
      }
      for (auto tok : tokens) row.push_back(parse_role(tok, line_no));
    }
    m.variables.push_back(name);
    m.cells.push_back(std::move(row));
  }
  if (first) throw Error(Errc::RaggedMatrix, "loop matrix has no variable rows", header_line);
  return m;
}

std::vector<VariableUse> loop_usage(const LoopMatrix& matrix, std::size_t section, std::size_t loop) {
  const auto col = matrix.column(section, loop);
  std::vector<VariableUse> used;
  for (std::size_t v = 0; v < matrix.variables.size(); ++v) {
    if (matrix.cells[v][col] != AccessRole::Unused) used.push_back({matrix.variables[v], matrix.cells[v][col]});
  }
  return used;
}

}  // namespace s3::metadata
