#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "copypaste/filterbank.hpp"
#include "copypaste/judge.hpp"
#include "copypaste/llmclient.hpp"
#include "copypaste/metrics.hpp"
#include "copypaste/prefbuild.hpp"

namespace copypaste::cli {

enum class BackendKind { kHttp, kMock };

struct EndpointConfig {
  BackendKind kind = BackendKind::kHttp;
  std::string base_url;  // empty: taken from the environment
  std::filesystem::path mock_script;
  int timeout_s = 120;
};

/// Scorer spec strings: "lexical_overlap", "constant:<value>" or an
/// http(s) URL.
struct ScorerSpec {
  std::string faith_doc = "lexical_overlap";
  std::string faith_sent = "lexical_overlap";
  std::string fluency;  // empty: no fluency scorer
  SentenceAggregate sentence_aggregate = SentenceAggregate::kMean;
};

/// default_criteria() without fluency_ppl. No local fluency scorer ships, so
/// that criterion is active only when a [[filter]] names it together with
/// scorers.fluency.
std::vector<FilterCriterion> default_config_criteria();

struct PipelineConfig {
  EndpointConfig endpoint;
  std::string generator_model = "gpt-4o-mini";
  std::string judge_model = "gpt-4o-mini";
  std::string embedding_model = "text-embedding-3-small";
  CopyScoreConfig copy_score;
  int t_max = 3;
  double temperature = 0.0;
  TournamentConfig elo;
  std::vector<JudgeDimension> dimensions = {JudgeDimension::kTwist, JudgeDimension::kCausal};
  std::vector<FilterCriterion> criteria = default_config_criteria();
  ScorerSpec scorers;
  std::size_t concurrency = 4;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> templates_dir;

  /// Throws Error(kConfig) on invalid numbers or missing referenced paths.
  void validate() const;
  /// Canonical form used for the manifest's config hash.
  nlohmann::json to_json() const;
  PipelineSettings settings() const;
};

/// Reads a TOML config. Relative paths resolve against the file's
/// directory. Throws Error(kConfig) or Error(kIo).
PipelineConfig load_config(const std::filesystem::path& path);

/// Parses TOML text; relative paths resolve against base_dir.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

std::shared_ptr<llm::Backend> make_backend(const EndpointConfig& endpoint);
std::shared_ptr<Scorer> make_scorer(const std::string& spec);
ScorerSet make_scorers(const ScorerSpec& spec);

}  // namespace copypaste::cli
