#include "copypaste/capture.hpp"

#include <algorithm>
#include <cmath>

#include "copypaste/error.hpp"
#include "copypaste/fragments.hpp"
#include "copypaste/metrics.hpp"
#include "copypaste/text_util.hpp"

namespace copypaste {

namespace {

std::set<std::string> bundled_stoplist() {
  return {
      // articles and determiners
      "a", "an", "the", "this", "that", "these", "those", "some", "any", "each", "every", "no",
      // prepositions
      "about", "above", "across", "after", "against", "along", "among", "around", "at", "before",
      "behind", "below", "between", "beyond", "by", "down", "during", "for", "from", "in",
      "into", "near", "of", "off", "on", "onto", "out", "over", "per", "since", "through", "to",
      "toward", "towards", "under", "until", "up", "upon", "via", "with", "within", "without",
      // conjunctions
      "and", "but", "or", "nor", "so", "yet", "as", "if", "than", "then", "though", "although",
      "because", "while", "whether", "unless", "when", "where",
      // pronouns
      "i", "me", "my", "we", "us", "our", "you", "your", "he", "him", "his", "she", "her", "it",
      "its", "they", "them", "their", "which", "who", "whom", "whose", "what",
      // auxiliaries and modals
      "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had", "do", "does",
      "did", "will", "would", "shall", "should", "may", "might", "must", "can", "could",
      // other function words
      "not", "also", "there", "here", "very", "just", "only", "such",
  };
}

}  // namespace

MeaninglessFilter::MeaninglessFilter() : stoplist_(bundled_stoplist()) {}

MeaninglessFilter::MeaninglessFilter(std::set<std::string> stoplist)
    : stoplist_(std::move(stoplist)) {}

std::optional<std::string> trace_surface(std::string_view token) {
  const TokenSeq seq = tokenize(trim(token));
  if (seq.content().size() != 1) return std::nullopt;
  return seq.content().front();
}

bool MeaninglessFilter::operator()(const TopKEntry& entry) const {
  if (entry.continuation) return true;
  const std::string trimmed = trim(entry.token);
  if (trimmed.rfind("##", 0) == 0) return true;
  const TokenSeq seq = tokenize(trimmed);
  if (seq.content().size() != 1) return true;  // punctuation, empty, or not a single word
  const std::string& surface = seq.content().front();
  if (seq[seq.content_index().front()].kind == TokenKind::kNumber && surface.size() < 2) {
    return true;
  }
  return stoplist_.count(surface) != 0;
}

std::set<std::string> common_substrings(const TokenSeq& context, const TokenSeq& a_para,
                                        std::size_t min_len) {
  if (min_len < 1) throw Error(ErrorKind::kInvalidArgument, "min_len must be >= 1");
  std::set<std::string> out;
  const FragmentSet frags = detect_fragments(context, a_para);
  for (const auto& f : frags.fragments) {
    if (f.length < min_len) continue;
    for (std::size_t t = 0; t < f.length; ++t) out.insert(a_para.content()[f.answer_start + t]);
  }
  return out;
}

CaptureResult capture(const GenerationTrace& ctx_trace, const GenerationTrace& para_trace,
                      const TokenSeq& context, const CaptureOptions& options,
                      const MeaninglessFilter& filter) {
  if (ctx_trace.query_id != para_trace.query_id) {
    throw Error(ErrorKind::kPairing, "trace query ids differ: " + ctx_trace.query_id + " vs " +
                                         para_trace.query_id);
  }
  if (!ctx_trace.with_context || para_trace.with_context) {
    throw Error(ErrorKind::kPairing,
                "expected one with-context trace and one context-free trace for " +
                    ctx_trace.query_id);
  }
  if (options.k == 0) throw Error(ErrorKind::kInvalidArgument, "k must be >= 1");
  for (const auto& step : ctx_trace.steps) {
    if (step.topk.size() < options.k) {
      throw Error(ErrorKind::kTraceDepth, "k=" + std::to_string(options.k) + " exceeds the " +
                                              std::to_string(step.topk.size()) +
                                              " candidates recorded at step " +
                                              std::to_string(step.step_index));
    }
  }

  const TokenSeq a_para = tokenize(para_trace.generated_text);
  const std::set<std::string> common = common_substrings(context, a_para, options.min_common);
  const std::set<std::string> in_context(context.content().begin(), context.content().end());
  const std::set<std::string> in_para(a_para.content().begin(), a_para.content().end());

  CaptureResult result;
  result.query_id = ctx_trace.query_id;
  std::set<std::string> seen_ctx;
  std::set<std::string> seen_para;
  for (const auto& step : ctx_trace.steps) {
    for (std::size_t j = 0; j < options.k; ++j) {
      const TopKEntry& entry = step.topk[j];
      if (entry.probability <= 0.0 || filter(entry)) continue;
      const auto surface = trace_surface(entry.token);
      if (!surface) continue;
      if (common.count(*surface) != 0) break;
      if (in_context.count(*surface) != 0 && seen_ctx.count(*surface) == 0) {
        seen_ctx.insert(*surface);
        result.p_ctx.push_back(entry.probability);
        result.h_ctx.push_back(step.hidden_ref);
        result.t_ctx.push_back(*surface);
        result.positions_ctx.push_back(step.step_index);
        break;
      }
      if (in_para.count(*surface) != 0 && seen_para.count(*surface) == 0) {
        seen_para.insert(*surface);
        result.p_para.push_back(entry.probability);
        result.h_para.push_back(step.hidden_ref);
        result.t_para.push_back(*surface);
        result.positions_para.push_back(step.step_index);
        break;
      }
    }
  }
  return result;
}

std::vector<PowerRow> position_power_profile(std::span<const CaptureResult> results,
                                             std::size_t max_len, PowerInput input) {
  if (results.empty()) throw Error(ErrorKind::kEmpty, "power profile over no capture results");
  if (max_len == 0) {
    for (const auto& r : results) {
      for (auto p : r.positions_ctx) max_len = std::max(max_len, p + 1);
      for (auto p : r.positions_para) max_len = std::max(max_len, p + 1);
    }
  }
  std::vector<std::vector<double>> ctx(max_len);
  std::vector<std::vector<double>> para(max_len);
  auto value = [input](double p) { return input == PowerInput::kProbability ? p : std::log(p); };
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.positions_ctx.size(); ++i) {
      if (r.positions_ctx[i] < max_len) ctx[r.positions_ctx[i]].push_back(value(r.p_ctx[i]));
    }
    for (std::size_t i = 0; i < r.positions_para.size(); ++i) {
      if (r.positions_para[i] < max_len) para[r.positions_para[i]].push_back(value(r.p_para[i]));
    }
  }
  std::vector<PowerRow> rows;
  rows.reserve(max_len);
  for (std::size_t pos = 0; pos < max_len; ++pos) {
    PowerRow row;
    row.position = pos;
    row.n_ctx = ctx[pos].size();
    row.n_para = para[pos].size();
    if (row.n_ctx > 0) row.ctx_power = logits_power(ctx[pos], row.n_ctx);
    if (row.n_para > 0) row.para_power = logits_power(para[pos], row.n_para);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace copypaste
