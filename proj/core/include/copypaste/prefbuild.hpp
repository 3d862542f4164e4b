#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "copypaste/filterbank.hpp"
#include "copypaste/judge.hpp"
#include "copypaste/llmclient.hpp"
#include "copypaste/promptgen.hpp"
#include "copypaste/templates.hpp"
#include "copypaste/types.hpp"

namespace copypaste {

struct PreferencePair {
  std::string prompt;
  std::string chosen;
  std::string rejected;
  std::string pair_id;
  CandidateMethod chosen_method = CandidateMethod::kCPRefine;
  CandidateMethod rejected_method = CandidateMethod::kBase;
  bool stamped = false;           // chosen carries the gold answer
  bool rejected_stamped = false;  // rejected carries a wrong answer

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};

inline constexpr std::string_view kConclusionTemplate = "\n\nTherefore, the answer is: {answer}";

/// Appends the fixed conclusion sentence carrying `answer`. An empty text
/// yields the conclusion sentence alone.
std::string stamp_answer(std::string_view text, std::string_view answer);

/// Query and context rendered with the Attributed prompt.
std::string render_pair_prompt(const QueryContextPair& pair, const TemplateSet& templates);

struct PipelineSettings {
  GenerationSettings generation;
  std::vector<FilterCriterion> criteria = default_criteria();
  TournamentConfig elo;
  std::vector<JudgeDimension> dimensions = {JudgeDimension::kTwist, JudgeDimension::kCausal};
  std::size_t concurrency = 4;
};

/// Clients and scorers a sample run talks to. The three clients may be the
/// same object.
struct PipelineServices {
  llm::Client& generator;
  llm::Client& judge;
  llm::Client& embedder;
  const TemplateSet& templates;
  ScorerSet scorers;
};

struct SampleResult {
  std::string pair_id;
  std::vector<Candidate> candidates;  // all six, in method order
  std::vector<PreferencePair> pairs;
  std::optional<TournamentResult> tournament;
  std::optional<std::string> best_candidate;
  bool skipped = false;
  std::string skip_reason;
  std::vector<std::string> flags;

  std::size_t survivors() const;
};

/// Generate, filter, rank, stamp and emit preference pairs for one pair.
SampleResult build_sample(const QueryContextPair& pair, const PipelineSettings& settings,
                          PipelineServices& services);

/// Picks the rated survivor with the highest aggregate Elo; ties go to the
/// higher copy score, then to the later method (CP-Refine first).
const Candidate& select_best(std::span<const Candidate> survivors);

/// Preference pairs for ranked survivors. `best` must be one of survivors.
std::vector<PreferencePair> emit_pairs(const QueryContextPair& pair,
                                       std::span<const Candidate> survivors, const Candidate& best,
                                       const std::string& prompt, std::vector<std::string>& flags);

/// Writes JSONL (one pair per line); returns the number of lines written.
/// Throws Error(kIo) if the path cannot be written.
std::size_t export_dataset(std::span<const PreferencePair> pairs, const std::filesystem::path& path);

std::vector<PreferencePair> read_dataset(const std::filesystem::path& path);

}  // namespace copypaste
