#include "copypaste/fragments.hpp"

#include <string_view>
#include <unordered_map>

namespace copypaste {

std::size_t FragmentSet::copied_tokens() const {
  std::size_t total = 0;
  for (const auto& f : fragments) total += f.length;
  return total;
}

FragmentSet detect_fragments(std::span<const std::string> context,
                             std::span<const std::string> answer) {
  FragmentSet out;
  out.answer_len = answer.size();
  if (context.empty() || answer.empty()) return out;

  // Positions are pushed in increasing order, so the first maximum found is
  // the smallest context start.
  std::unordered_map<std::string_view, std::vector<std::size_t>> positions;
  for (std::size_t j = 0; j < context.size(); ++j) {
    positions[context[j]].push_back(j);
  }

  std::size_t i = 0;
  while (i < answer.size()) {
    std::size_t best_len = 0;
    std::size_t best_start = 0;
    if (auto it = positions.find(answer[i]); it != positions.end()) {
      for (const std::size_t start : it->second) {
        std::size_t len = 0;
        while (i + len < answer.size() && start + len < context.size() &&
               answer[i + len] == context[start + len]) {
          ++len;
        }
        if (len > best_len) {
          best_len = len;
          best_start = start;
        }
      }
    }
    if (best_len > 0) {
      out.fragments.push_back({i, best_start, best_len});
      i += best_len;
    } else {
      ++i;
    }
  }
  return out;
}

FragmentSet detect_fragments(const TokenSeq& context, const TokenSeq& answer) {
  return detect_fragments(std::span<const std::string>(context.content()),
                          std::span<const std::string>(answer.content()));
}

namespace {

ByteSpan content_bytes(const TokenSeq& seq, std::size_t start, std::size_t length) {
  const auto& idx = seq.content_index();
  const auto& first = seq[idx.at(start)];
  const auto& last = seq[idx.at(start + length - 1)];
  return {first.raw_span.begin, last.raw_span.end};
}

}  // namespace

ByteSpan answer_bytes(const TokenSeq& answer, const CopyFragment& f) {
  return content_bytes(answer, f.answer_start, f.length);
}

ByteSpan context_bytes(const TokenSeq& context, const CopyFragment& f) {
  return content_bytes(context, f.context_start, f.length);
}

}  // namespace copypaste
