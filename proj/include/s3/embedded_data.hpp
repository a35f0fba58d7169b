#pragma once

#include <map>
#include <string_view>

namespace s3::data {

/// Data files compiled into the library, keyed by their path under data/
/// (for example "lexicon.s3lex" or "templates/docs_answer.txt").
const std::map<std::string_view, std::string_view>& files();

}  // namespace s3::data
