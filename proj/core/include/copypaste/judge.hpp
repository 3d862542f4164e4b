#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "copypaste/error.hpp"
#include "copypaste/llmclient.hpp"
#include "copypaste/templates.hpp"
#include "copypaste/types.hpp"

namespace copypaste {

enum class Verdict { kA, kB, kTie };
enum class JudgeDimension { kTwist, kCausal };

std::string_view to_string(Verdict v);
std::string_view to_string(JudgeDimension d);

/// Reads {"verdict": "A|B|TIE"}; falls back to bare standalone A, B or TIE
/// tokens when they all agree. Never throws.
Parsed<Verdict> parse_verdict(std::string_view reply);

struct PairVerdict {
  Verdict verdict = Verdict::kTie;
  bool format_error = false;  // neither ordering produced a parseable verdict
  bool disagreement = false;  // the two orderings disagreed (or one was unparseable)
};

/// Elo update with expected score 1 / (1 + 10^((rb - ra) / 400)).
std::pair<double, double> elo_update(double ra, double rb, Verdict outcome, double k);

struct EloRating {
  std::string candidate_id;
  double rating = 1500.0;
  int games = 0;
};

struct TournamentConfig {
  double k = 32.0;
  double initial = 1500.0;
  int passes = 1;
};

struct MatchRecord {
  std::string a;
  std::string b;
  JudgeDimension dim = JudgeDimension::kTwist;
  int pass = 0;
  PairVerdict verdict;
};

struct TournamentResult {
  std::map<JudgeDimension, std::vector<EloRating>> per_dimension;  // sorted by id
  std::vector<EloRating> aggregate;  // mean over dimensions, sorted by id
  std::vector<MatchRecord> matches;  // in schedule order
  std::size_t errored_matches = 0;

  double aggregate_of(std::string_view candidate_id) const;
};

class Judge {
 public:
  Judge(llm::Client& client, const TemplateSet& templates);

  /// Runs both orderings and reconciles: agreement keeps the verdict,
  /// anything else is a TIE.
  PairVerdict compare_pair(std::string_view context, std::string_view resp_a,
                           std::string_view resp_b, JudgeDimension dim);

  /// Round robin over all unordered pairs in candidate-id order, one
  /// comparison per dimension per pair per pass. Verdicts may be fetched
  /// concurrently; ratings are applied sequentially in schedule order.
  /// Throws Error(kJudgeFormat) only when every match errored.
  TournamentResult run_tournament(const std::vector<Candidate>& candidates,
                                  std::string_view context,
                                  const std::vector<JudgeDimension>& dims,
                                  const TournamentConfig& config);

  std::string render_prompt(std::string_view context, std::string_view resp_a,
                            std::string_view resp_b, JudgeDimension dim) const;

 private:
  llm::Client& client_;
  const TemplateSet& templates_;
};

}  // namespace copypaste
