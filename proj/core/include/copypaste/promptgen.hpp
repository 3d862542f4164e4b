#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "copypaste/error.hpp"
#include "copypaste/llmclient.hpp"
#include "copypaste/metrics.hpp"
#include "copypaste/templates.hpp"
#include "copypaste/types.hpp"

namespace copypaste {

struct ExtractedSentence {
  std::string sent_id;  // SENT_1, SENT_2, ...
  std::string text;
  bool verified_in_context = false;
};

struct Extraction {
  std::vector<ExtractedSentence> sentences;  // verified only
  std::size_t dropped = 0;                   // EXTRACTED lines not found in the context
};

struct LinkBlocks {
  std::optional<std::string> intro;
  std::optional<std::string> conclusion;
  /// (i, j, text) for every [TRANSITION_i_j] block, 1-based.
  struct Transition {
    std::size_t from = 0;
    std::size_t to = 0;
    std::string text;
  };
  std::vector<Transition> transitions;
};

struct LinkResult {
  std::string text;
  bool fallback = false;  // reply had no usable blocks; sentences joined plainly
  std::size_t truncated_transitions = 0;
};

struct RefineState {
  int iteration = 0;
  std::string answer;
  std::optional<std::string> feedback;  // reviewer feedback that produced this draft
  std::optional<double> score;
  bool writer_failed = false;
};

struct RefineResult {
  std::string answer;
  std::vector<RefineState> history;
  bool below_threshold = false;
  std::size_t reviewer_calls = 0;
};

inline constexpr std::size_t kMaxTransitionWords = 15;

// Structured-output parsers. Total over arbitrary input: they return a
// value or a FormatError and never throw.

/// Text of every line that starts with "EXTRACTED: " (leading spaces
/// allowed), in reply order.
std::vector<std::string> parse_extracted(std::string_view reply);

/// Sentence ids from the first "ORDER:" line.
Parsed<std::vector<std::string>> parse_order(std::string_view reply);

/// [INTRO], [CONCLUSION] and [TRANSITION_i_j] blocks. Unclosed or malformed
/// blocks are ignored; an error is returned when none is found.
Parsed<LinkBlocks> parse_link(std::string_view reply);

/// Applies the ORDER repair rule: unknown and repeated ids are dropped,
/// missing ids are appended in their original order.
std::vector<std::string> repair_order(const std::vector<std::string>& proposed,
                                      const std::vector<std::string>& known);

/// True iff sentence occurs in context after whitespace normalization.
bool occurs_verbatim(std::string_view sentence, std::string_view context);

/// "SENT_1: ...\nSENT_2: ..."
std::string numbered_sentences(const std::vector<ExtractedSentence>& sentences);

/// "[1] ...\n[2] ..." over the context's sentences, as used by Citations.
std::string numbered_passages(std::string_view context);

/// Composes copy metrics for an answer against its context. Citation
/// markers are stripped first when strip_markers is set.
CopyMetrics answer_metrics(std::string_view context, std::string_view answer,
                           bool strip_markers = false);

struct GenerationSettings {
  CopyScoreConfig score;
  int t_max = 3;
  double temperature = 0.0;
};

/// Drives the CopyPaste prompting strategies and the three baselines
/// against one client and template set.
class PromptGenerator {
 public:
  PromptGenerator(llm::Client& client, const TemplateSet& templates,
                  GenerationSettings settings = {});

  /// Throws Error(kExtractionFailed) when no extracted sentence verifies.
  Extraction extract_sentences(const QueryContextPair& pair);

  /// Throws Error(kFormat) when the reply has no parseable ORDER line.
  std::string cp_order(const QueryContextPair& pair,
                       const std::vector<ExtractedSentence>& sentences);

  LinkResult cp_link(const QueryContextPair& pair,
                     const std::vector<ExtractedSentence>& sentences);

  /// Writer/reviewer loop. Exits once the copy score reaches the threshold
  /// or after t_max reviewer rounds.
  RefineResult cp_refine(const QueryContextPair& pair);

  /// Never throws for library errors: parse failures, extraction failures
  /// and exhausted retries come back as a candidate with status gen_failed.
  Candidate generate_candidate(const QueryContextPair& pair, CandidateMethod method);

  /// Prompt text a baseline method sends (Base, Attributed, Citations).
  std::string baseline_prompt(const QueryContextPair& pair, CandidateMethod method) const;

  const GenerationSettings& settings() const { return settings_; }

 private:
  std::string ask(std::string prompt);

  llm::Client& client_;
  const TemplateSet& templates_;
  GenerationSettings settings_;
};

}  // namespace copypaste
