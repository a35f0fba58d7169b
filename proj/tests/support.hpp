#pragma once

#include <filesystem>
#include <functional>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "s3/corpus.hpp"
#include "s3/error.hpp"
#include "s3/fql.hpp"
#include "s3/metadata.hpp"
#include "s3/text.hpp"

namespace s3::testing {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(S3_FIXTURE_DIR) / rel; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("s3test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::permissions(path_, std::filesystem::perms::owner_all, std::filesystem::perm_options::add, ec);
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Error code thrown by `fn`, or nullopt when it returns normally.
inline std::optional<Errc> code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline corpus::SourceFile make_file(std::string path, std::vector<std::string> lines) {
  corpus::SourceFile f;
  f.language = corpus::classify(path);
  f.path = std::move(path);
  f.line_count = lines.size();
  f.lines = std::move(lines);
  return f;
}

// ---------------------------------------------------------------------------
// Brute-force oracles
// ---------------------------------------------------------------------------

struct HitKey {
  std::string file;
  std::size_t line;
  std::string term;
  bool operator==(const HitKey&) const = default;
};

inline std::string ascii_lower(std::string s) {
  for (auto& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return s;
}

/// Filters used by the random tests are either "*" or suffix globs "*.ext".
inline bool oracle_accepts(const fql::FileFilter& filter, const std::string& path) {
  if (filter.is_wildcard()) return true;
  const auto base = path.substr(path.rfind('/') == std::string::npos ? 0 : path.rfind('/') + 1);
  for (const auto& g : std::get<std::vector<std::string>>(filter.spec)) {
    const auto suffix = g.substr(1);
    if (base.size() >= suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return true;
    }
  }
  return false;
}

inline std::vector<HitKey> oracle_hits(const fql::CheckQuery& q, const corpus::CorpusSnapshot& snap,
                                       bool case_sensitive) {
  std::vector<HitKey> out;
  for (const auto& f : snap.files()) {
    if (!oracle_accepts(q.filter, f.path)) continue;
    for (std::size_t i = 0; i < f.lines.size(); ++i) {
      const auto line = case_sensitive ? f.lines[i] : ascii_lower(f.lines[i]);
      for (const auto& t : q.pattern.terms) {
        const auto needle = case_sensitive ? t : ascii_lower(t);
        if (line.find(needle) != std::string::npos) out.push_back({f.path, i + 1, t});
      }
    }
  }
  return out;
}

inline std::vector<HitKey> keys_of(const std::vector<fql::Hit>& hits) {
  std::vector<HitKey> out;
  for (const auto& h : hits) out.push_back({h.file, h.line, h.term});
  return out;
}

/// Nested-loop join + filter + projection, written independently of query_tables.
inline std::vector<std::vector<std::string>> oracle_query(const metadata::TableCatalog& catalog,
                                                          const metadata::QueryPlan& plan) {
  auto find = [&](const std::string& name) -> const metadata::Table& {
    for (const auto& t : catalog) {
      if (ascii_lower(t.name) == ascii_lower(name)) return t;
    }
    throw std::runtime_error("no table " + name);
  };
  auto col = [](const metadata::Table& t, const std::string& c) -> std::size_t {
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      if (ascii_lower(t.columns[i]) == ascii_lower(c)) return i;
    }
    return static_cast<std::size_t>(-1);
  };
  const auto& left = find(plan.from);
  const metadata::Table* right = plan.join ? &find(plan.join->table) : nullptr;

  // Resolve a column reference to (side, index): side 0 = left, 1 = right.
  auto resolve = [&](const metadata::ColumnRef& ref) -> std::pair<int, std::size_t> {
    if (ref.table) {
      if (ascii_lower(*ref.table) == ascii_lower(left.name)) return {0, col(left, ref.column)};
      return {1, col(*right, ref.column)};
    }
    if (col(left, ref.column) != static_cast<std::size_t>(-1)) return {0, col(left, ref.column)};
    return {1, col(*right, ref.column)};
  };

  std::vector<std::vector<std::string>> out;
  auto emit = [&](const std::vector<std::string>& l, const std::vector<std::string>* r) {
    auto cell = [&](const metadata::ColumnRef& ref) {
      const auto [side, i] = resolve(ref);
      return side == 0 ? l[i] : (*r)[i];
    };
    for (const auto& f : plan.where) {
      if (cell(f.column) != f.value) return;
    }
    std::vector<std::string> row;
    if (plan.select.empty()) {
      row = l;
      if (r) {
        const auto [jside, jcol] = resolve(plan.join->right);
        const auto skip = jside == 1 ? jcol : resolve(plan.join->left).second;
        for (std::size_t i = 0; i < r->size(); ++i) {
          if (i != skip) row.push_back((*r)[i]);
        }
      }
    } else {
      for (const auto& s : plan.select) row.push_back(cell(s));
    }
    out.push_back(std::move(row));
  };
  for (const auto& l : left.rows) {
    if (!right) {
      emit(l, nullptr);
      continue;
    }
    for (const auto& r : right->rows) {
      const auto a = resolve(plan.join->left);
      const auto b = resolve(plan.join->right);
      const auto& va = a.first == 0 ? l[a.second] : r[a.second];
      const auto& vb = b.first == 0 ? l[b.second] : r[b.second];
      if (va == vb) emit(l, &r);
    }
  }
  return out;
}

}  // namespace s3::testing
