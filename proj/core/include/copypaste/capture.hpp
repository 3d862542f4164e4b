#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "copypaste/textseg.hpp"
#include "copypaste/trace.hpp"

namespace copypaste {

/// Decides which candidate tokens carry no knowledge: stoplisted function
/// words, punctuation, single-digit numerals and subword continuations.
class MeaninglessFilter {
 public:
  /// Bundled English function words (articles, prepositions, conjunctions,
  /// pronouns, auxiliaries).
  MeaninglessFilter();
  explicit MeaninglessFilter(std::set<std::string> stoplist);

  bool operator()(const TopKEntry& entry) const;
  const std::set<std::string>& stoplist() const { return stoplist_; }

 private:
  std::set<std::string> stoplist_;
};

/// Normalized word surface of a trace token (whitespace trimmed, case
/// folded); nullopt when it holds no single word or number.
std::optional<std::string> trace_surface(std::string_view token);

/// Surfaces inside any copy fragment of at least min_len tokens between the
/// context and the context-free answer.
std::set<std::string> common_substrings(const TokenSeq& context, const TokenSeq& a_para,
                                        std::size_t min_len);

inline constexpr std::size_t kDefaultMinCommonRun = 3;

struct CaptureResult {
  std::string query_id;
  std::vector<double> p_ctx;
  std::vector<double> p_para;
  std::vector<std::uint64_t> h_ctx;
  std::vector<std::uint64_t> h_para;
  std::vector<std::string> t_ctx;  // in capture order, no repeats
  std::vector<std::string> t_para;
  std::vector<std::size_t> positions_ctx;
  std::vector<std::size_t> positions_para;
};

struct CaptureOptions {
  std::size_t k = 3;
  std::size_t min_common = kDefaultMinCommonRun;
};

/// Context-parameter copying capture over a with-context trace, using the
/// context-free trace's text as the parametric reference. At each step the
/// top-k candidates are scanned in rank order: meaningless tokens are
/// skipped, a token shared by context and parametric answer ends the step,
/// and the first new context token (else new parametric token) is captured.
///
/// Throws Error(kPairing) for mismatched traces and Error(kTraceDepth) when
/// k exceeds the candidates recorded at some step.
CaptureResult capture(const GenerationTrace& ctx_trace, const GenerationTrace& para_trace,
                      const TokenSeq& context, const CaptureOptions& options,
                      const MeaninglessFilter& filter = MeaninglessFilter());

enum class PowerInput { kProbability, kLogProbability };

struct PowerRow {
  std::size_t position = 0;
  double ctx_power = 0.0;
  double para_power = 0.0;
  std::size_t n_ctx = 0;
  std::size_t n_para = 0;
};

/// Buckets captured values by step position across results and applies
/// logits_power per bucket. Rows cover positions [0, max_len); max_len 0
/// means up to the largest captured position. Empty buckets give zeros.
std::vector<PowerRow> position_power_profile(std::span<const CaptureResult> results,
                                             std::size_t max_len,
                                             PowerInput input = PowerInput::kProbability);

}  // namespace copypaste
