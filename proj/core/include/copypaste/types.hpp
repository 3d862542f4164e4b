#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "copypaste/metrics.hpp"

namespace copypaste {

struct QueryContextPair {
  std::string id;
  std::string query;
  std::string context;
  std::optional<std::string> gold_answer;
  std::vector<std::string> wrong_answers;

  /// Throws Error(kInvalidArgument) if id, query or context is empty.
  void validate() const;
  bool has_answers() const { return gold_answer.has_value() && !wrong_answers.empty(); }
};

enum class CandidateMethod { kBase, kAttributed, kCitations, kCPOrder, kCPLink, kCPRefine };

inline constexpr std::array<CandidateMethod, 6> kAllMethods = {
    CandidateMethod::kBase,    CandidateMethod::kAttributed, CandidateMethod::kCitations,
    CandidateMethod::kCPOrder, CandidateMethod::kCPLink,     CandidateMethod::kCPRefine};

/// Stable slug: base, attributed, citations, cp_order, cp_link, cp_refine.
std::string_view to_string(CandidateMethod m);
std::optional<CandidateMethod> method_from_string(std::string_view s);
bool is_copypaste(CandidateMethod m);

enum class MetricId { kFaithDoc, kFaithSent, kCoverage, kDensity, kRelevance, kFluencyPpl };

inline constexpr std::array<MetricId, 6> kAllMetrics = {
    MetricId::kFaithDoc, MetricId::kFaithSent, MetricId::kCoverage,
    MetricId::kDensity,  MetricId::kRelevance, MetricId::kFluencyPpl};

std::string_view to_string(MetricId m);
std::optional<MetricId> metric_from_string(std::string_view s);

struct ScoreCard {
  std::string candidate_id;
  /// nullopt marks a metric whose scorer failed.
  std::map<MetricId, std::optional<double>> scores;
  std::map<MetricId, std::string> errors;
  bool passed = false;
  std::vector<MetricId> failed_criteria;
};

enum class CandidateStatus { kOk, kGenFailed, kFilteredOut };

std::string_view to_string(CandidateStatus s);
std::optional<CandidateStatus> status_from_string(std::string_view s);

struct Candidate {
  std::string candidate_id;  // "<pair_id>/<method>"
  std::string pair_id;
  CandidateMethod method = CandidateMethod::kBase;
  std::string text;
  CopyMetrics metrics;
  double copy_score = 0.0;
  std::optional<ScoreCard> scorecard;
  std::optional<double> elo;
  CandidateStatus status = CandidateStatus::kOk;
  std::string failure;  // reason when status != ok
  std::vector<std::string> flags;

  static std::string make_id(std::string_view pair_id, CandidateMethod m);
};

}  // namespace copypaste
