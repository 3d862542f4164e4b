#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "copypaste/prefbuild.hpp"
#include "copypaste/types.hpp"

namespace copypaste {

/// Parses a JSON-lines file, skipping blank lines. Errors name the line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Input pair line: {id, query, context, gold_answer?, wrong_answers?}.
QueryContextPair pair_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QueryContextPair& pair);
std::vector<QueryContextPair> read_pairs(const std::filesystem::path& path);

nlohmann::json to_json(const CopyMetrics& m);
nlohmann::json to_json(const ScoreCard& card);
nlohmann::json to_json(const Candidate& cand);
Candidate candidate_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PreferencePair& p);
PreferencePair preference_pair_from_json(const nlohmann::json& j);

}  // namespace copypaste
