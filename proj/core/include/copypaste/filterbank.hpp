#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "copypaste/llmclient.hpp"
#include "copypaste/types.hpp"

namespace copypaste {

enum class Direction { kAtLeast, kAtMost };
enum class ErrorPolicy { kFailClosed, kFailOpen };

struct FilterCriterion {
  MetricId metric = MetricId::kCoverage;
  double threshold = 0.0;
  Direction direction = Direction::kAtLeast;
  ErrorPolicy on_error = ErrorPolicy::kFailClosed;

  /// fluency_ppl must use at_most, every other metric at_least.
  void validate() const;
  bool accepts(double value) const;
};

/// faith_doc >= 0.6, faith_sent >= 0.6, coverage >= 0.5, density >= 2.0,
/// relevance >= 0.5, fluency_ppl <= 60; all fail-closed.
std::vector<FilterCriterion> default_criteria();

/// One real-valued score per call. `context` is empty for fluency.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(std::string_view context, std::string_view claim) = 0;
};

/// POSTs {"context", "claim"} (or {"text"} when text_only) and reads
/// {"score": real}.
class HttpScorer : public Scorer {
 public:
  HttpScorer(std::string url, bool text_only, std::chrono::seconds timeout = std::chrono::seconds(60));
  double score(std::string_view context, std::string_view claim) override;

  static double parse_payload(const std::string& payload);

 private:
  std::string url_;
  bool text_only_;
  std::chrono::seconds timeout_;
};

class ConstantScorer : public Scorer {
 public:
  explicit ConstantScorer(double value) : value_(value) {}
  double score(std::string_view, std::string_view) override { return value_; }

 private:
  double value_;
};

/// Fraction of the claim's content tokens that occur in the context; a
/// local stand-in for a learned faithfulness model.
class LexicalOverlapScorer : public Scorer {
 public:
  double score(std::string_view context, std::string_view claim) override;
};

enum class SentenceAggregate { kMean, kMin };

struct ScorerSet {
  std::shared_ptr<Scorer> faith_doc;
  std::shared_ptr<Scorer> faith_sent;
  std::shared_ptr<Scorer> fluency;
  SentenceAggregate sentence_aggregate = SentenceAggregate::kMean;
};

/// Fills every metric of the card: coverage and density from copy
/// fragments, relevance from embedding cosine, the rest from scorers. A
/// scorer failure is recorded as an errored metric. `passed` and
/// `failed_criteria` are evaluated against criteria.
ScoreCard score_candidate(const Candidate& cand, const QueryContextPair& pair, ScorerSet& scorers,
                          llm::Client& client, std::span<const FilterCriterion> criteria);

/// Recomputes passed / failed_criteria of one card.
void evaluate_card(ScoreCard& card, std::span<const FilterCriterion> criteria);

/// Evaluates every card and returns the ids that satisfy all criteria, in
/// input order.
std::vector<std::string> apply_filter(std::span<ScoreCard> cards,
                                      std::span<const FilterCriterion> criteria);

}  // namespace copypaste
