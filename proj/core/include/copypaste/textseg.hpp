#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace copypaste {

enum class TokenKind { kWord, kNumber, kPunctuation };

std::string_view to_string(TokenKind kind);

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

struct Token {
  std::string surface;  // case-folded
  ByteSpan raw_span;
  TokenKind kind = TokenKind::kWord;

  bool is_content() const { return kind != TokenKind::kPunctuation; }
};

/// Word-level tokenization of a source text. Every token keeps the byte span
/// it was read from; only word and number tokens take part in copy matching.
class TokenSeq {
 public:
  TokenSeq() = default;
  TokenSeq(std::string source, std::vector<Token> tokens);

  const std::string& source() const { return source_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }

  /// Surfaces of word and number tokens, in order. This is the sequence the
  /// copy metrics count as |A|.
  const std::vector<std::string>& content() const { return content_; }
  /// content()[k] came from tokens()[content_index()[k]].
  const std::vector<std::size_t>& content_index() const { return content_index_; }

  std::vector<std::string> surfaces() const;
  std::string_view raw(std::size_t i) const;

 private:
  std::string source_;
  std::vector<Token> tokens_;
  std::vector<std::string> content_;
  std::vector<std::size_t> content_index_;
};

/// Splits UTF-8 text into word, number and punctuation tokens.
///
/// Words are maximal runs of letters and digits; an apostrophe or period
/// between two alphanumerics and a comma or period between two digits stay
/// inside the token, so "don't", "e.g" and "7.4" are single tokens. Han and
/// kana characters form one token each. Any other non-space code point is a
/// single punctuation token. Malformed bytes become punctuation tokens of
/// one byte, which keeps the span property lossless for arbitrary input.
TokenSeq tokenize(std::string_view text);

/// Case folding used for token surfaces: ASCII, Latin-1, Latin Extended-A,
/// Greek and Cyrillic upper-case letters map to lower case.
std::string fold_case(std::string_view text);

}  // namespace copypaste
