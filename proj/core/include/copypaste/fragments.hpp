#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "copypaste/textseg.hpp"

namespace copypaste {

/// A verbatim run shared by answer and context. Indices count content
/// tokens (words and numbers); punctuation is invisible to matching.
struct CopyFragment {
  std::size_t answer_start = 0;
  std::size_t context_start = 0;
  std::size_t length = 0;

  friend bool operator==(const CopyFragment&, const CopyFragment&) = default;
};

struct FragmentSet {
  std::vector<CopyFragment> fragments;  // sorted by answer_start, disjoint
  std::size_t answer_len = 0;

  std::size_t copied_tokens() const;
};

/// Greedy longest-match fragment detection. Walks the answer left to right;
/// at each position takes the longest context run starting with the same
/// token (smallest context position on ties), emits it and jumps past it.
FragmentSet detect_fragments(std::span<const std::string> context,
                             std::span<const std::string> answer);

FragmentSet detect_fragments(const TokenSeq& context, const TokenSeq& answer);

/// Byte span in the answer's source text covered by a fragment.
ByteSpan answer_bytes(const TokenSeq& answer, const CopyFragment& f);
ByteSpan context_bytes(const TokenSeq& context, const CopyFragment& f);

}  // namespace copypaste
