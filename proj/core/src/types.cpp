#include "copypaste/types.hpp"

#include "copypaste/error.hpp"

namespace copypaste {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kExtractionFailed: return "extraction_failed";
    case ErrorKind::kGenerationFailed: return "generation_failed";
    case ErrorKind::kJudgeFormat: return "judge_format";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kProtocol: return "protocol";
    case ErrorKind::kScorer: return "scorer";
    case ErrorKind::kEmptyBucket: return "empty_bucket";
    case ErrorKind::kPairing: return "pairing";
    case ErrorKind::kTraceDepth: return "trace_depth";
    case ErrorKind::kTraceFormat: return "trace_format";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kEmpty: return "empty";
  }
  return "unknown";
}

void QueryContextPair::validate() const {
  if (id.empty()) throw Error(ErrorKind::kInvalidArgument, "pair without id");
  if (query.empty()) throw Error(ErrorKind::kInvalidArgument, "pair " + id + " has an empty query");
  if (context.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "pair " + id + " has an empty context");
  }
}

std::string_view to_string(CandidateMethod m) {
  switch (m) {
    case CandidateMethod::kBase: return "base";
    case CandidateMethod::kAttributed: return "attributed";
    case CandidateMethod::kCitations: return "citations";
    case CandidateMethod::kCPOrder: return "cp_order";
    case CandidateMethod::kCPLink: return "cp_link";
    case CandidateMethod::kCPRefine: return "cp_refine";
  }
  return "base";
}

std::optional<CandidateMethod> method_from_string(std::string_view s) {
  for (auto m : kAllMethods) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

bool is_copypaste(CandidateMethod m) {
  return m == CandidateMethod::kCPOrder || m == CandidateMethod::kCPLink ||
         m == CandidateMethod::kCPRefine;
}

std::string_view to_string(MetricId m) {
  switch (m) {
    case MetricId::kFaithDoc: return "faith_doc";
    case MetricId::kFaithSent: return "faith_sent";
    case MetricId::kCoverage: return "coverage";
    case MetricId::kDensity: return "density";
    case MetricId::kRelevance: return "relevance";
    case MetricId::kFluencyPpl: return "fluency_ppl";
  }
  return "coverage";
}

std::optional<MetricId> metric_from_string(std::string_view s) {
  for (auto m : kAllMetrics) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

std::string_view to_string(CandidateStatus s) {
  switch (s) {
    case CandidateStatus::kOk: return "ok";
    case CandidateStatus::kGenFailed: return "gen_failed";
    case CandidateStatus::kFilteredOut: return "filtered_out";
  }
  return "ok";
}

std::optional<CandidateStatus> status_from_string(std::string_view s) {
  if (s == "ok") return CandidateStatus::kOk;
  if (s == "gen_failed") return CandidateStatus::kGenFailed;
  if (s == "filtered_out") return CandidateStatus::kFilteredOut;
  return std::nullopt;
}

std::string Candidate::make_id(std::string_view pair_id, CandidateMethod m) {
  return std::string(pair_id) + "/" + std::string(to_string(m));
}

}  // namespace copypaste
