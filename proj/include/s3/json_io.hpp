#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "s3/corpus.hpp"
#include "s3/fql.hpp"
#include "s3/llm.hpp"
#include "s3/metadata.hpp"
#include "s3/ragdoc.hpp"

// JSON views of the core result types. These are the payloads shared by the
// command line tool, the HTTP API and the Python module.
namespace s3::json_io {

using nlohmann::json;

json to_json(const fql::Hit& hit);
json to_json(const fql::CheckReport& report, const fql::CheckQuery& check);
json to_json(const fql::FeatureReport& report, const fql::FqlQuery& query);

/// Stats of a scanned corpus; `snapshot == nullptr` gives the all-zero view.
json stats_json(const corpus::CorpusSnapshot* snapshot);

json to_json(const metadata::QualifiedName& name);
json to_json(const metadata::CallGraph& graph);
json to_json(const metadata::Table& table);
json to_json(const metadata::QueryPlan& plan);
metadata::QueryPlan plan_from_json(const json& j);
json to_json(const metadata::LoopMatrix& matrix);
json to_json(const std::vector<metadata::VariableUse>& uses);

json to_json(const ragdoc::Chunk& chunk);
json to_json(const ragdoc::RetrievedContext& context);

json to_json(const llm::Turn& turn);
json to_json(const llm::Session& session);

}  // namespace s3::json_io
