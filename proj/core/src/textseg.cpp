#include "copypaste/textseg.hpp"

#include <cstdint>
#include <utility>

#include "utf8.hpp"

namespace copypaste {

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::kWord:
      return "word";
    case TokenKind::kNumber:
      return "number";
    case TokenKind::kPunctuation:
      return "punctuation";
  }
  return "word";
}

TokenSeq::TokenSeq(std::string source, std::vector<Token> tokens)
    : source_(std::move(source)), tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].is_content()) {
      content_.push_back(tokens_[i].surface);
      content_index_.push_back(i);
    }
  }
}

std::vector<std::string> TokenSeq::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens_.size());
  for (const auto& t : tokens_) out.push_back(t.surface);
  return out;
}

std::string_view TokenSeq::raw(std::size_t i) const {
  const auto& span = tokens_.at(i).raw_span;
  return std::string_view(source_).substr(span.begin, span.size());
}

namespace {

using utf8::CodePoint;

bool is_space(char32_t c) {
  switch (c) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\v':
    case U'\f':
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
    case 0xFEFF:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200B;
  }
}

bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

bool is_ideographic(char32_t c) {
  return (c >= 0x3040 && c <= 0x30FF) || (c >= 0x3400 && c <= 0x4DBF) ||
         (c >= 0x4E00 && c <= 0x9FFF) || (c >= 0xF900 && c <= 0xFAFF) ||
         (c >= 0x20000 && c <= 0x2FFFF);
}

bool is_symbol_block(char32_t c) {
  if (c < 0x20 || c == 0x7F) return true;
  if (c >= 0x80 && c <= 0xBF) {
    // ª µ º are letters
    return c != 0xAA && c != 0xB5 && c != 0xBA;
  }
  if (c == 0xD7 || c == 0xF7) return true;
  return (c >= 0x2000 && c <= 0x2BFF) || (c >= 0x2E00 && c <= 0x2E7F) ||
         (c >= 0x3000 && c <= 0x303F) || (c >= 0xFE10 && c <= 0xFE6F) ||
         (c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
         (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65) ||
         (c >= 0x1F000 && c <= 0x1FAFF);
}

bool is_alnum(char32_t c) {
  if (c < 0x80) {
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') ||
           is_ascii_digit(c);
  }
  return !is_space(c) && !is_ideographic(c) && !is_symbol_block(c);
}

bool is_letter_joiner(char32_t c) { return c == U'\'' || c == U'.' || c == 0x2019; }
bool is_number_joiner(char32_t c) { return c == U',' || c == U'.'; }

}  // namespace

TokenSeq tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const CodePoint cp = utf8::decode(text, pos);
    if (!cp.valid) {
      tokens.push_back({std::string(text.substr(pos, 1)), {pos, pos + 1},
                        TokenKind::kPunctuation});
      pos += 1;
      continue;
    }
    if (is_space(cp.value)) {
      pos += cp.length;
      continue;
    }
    if (is_ideographic(cp.value)) {
      tokens.push_back({std::string(text.substr(pos, cp.length)),
                        {pos, pos + cp.length}, TokenKind::kWord});
      pos += cp.length;
      continue;
    }
    if (!is_alnum(cp.value)) {
      tokens.push_back({fold_case(text.substr(pos, cp.length)),
                        {pos, pos + cp.length}, TokenKind::kPunctuation});
      pos += cp.length;
      continue;
    }

    const std::size_t start = pos;
    bool has_letter = !is_ascii_digit(cp.value);
    char32_t prev = cp.value;
    pos += cp.length;
    while (pos < text.size()) {
      const CodePoint next = utf8::decode(text, pos);
      if (!next.valid) break;
      if (is_alnum(next.value)) {
        has_letter = has_letter || !is_ascii_digit(next.value);
        prev = next.value;
        pos += next.length;
        continue;
      }
      const bool joiner = is_letter_joiner(next.value) || is_number_joiner(next.value);
      if (!joiner) break;
      const std::size_t after = pos + next.length;
      if (after >= text.size()) break;
      const CodePoint follow = utf8::decode(text, after);
      if (!follow.valid || !is_alnum(follow.value)) break;
      const bool numeric = is_number_joiner(next.value) && is_ascii_digit(prev) &&
                           is_ascii_digit(follow.value);
      const bool lexical = is_letter_joiner(next.value);
      if (!numeric && !lexical) break;
      pos = after;
    }
    tokens.push_back({fold_case(text.substr(start, pos - start)),
                      {start, pos},
                      has_letter ? TokenKind::kWord : TokenKind::kNumber});
  }
  return TokenSeq(std::string(text), std::move(tokens));
}

namespace {

char32_t fold(char32_t c) {
  if (c < 0x80) return (c >= U'A' && c <= U'Z') ? c + 32 : c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if ((c >= 0x100 && c <= 0x137) || (c >= 0x14A && c <= 0x177)) {
    return (c % 2 == 0 && c != 0x130) ? c + 1 : c;
  }
  if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) {
    return (c % 2 == 1) ? c + 1 : c;
  }
  if (c == 0x178) return 0xFF;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c == 0x386) return 0x3AC;
  if (c >= 0x388 && c <= 0x38A) return c + 37;
  if (c == 0x38C) return 0x3CC;
  if (c == 0x38E || c == 0x38F) return c + 63;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

}  // namespace

std::string fold_case(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const CodePoint cp = utf8::decode(text, pos);
    if (!cp.valid) {
      out.push_back(text[pos]);
      ++pos;
      continue;
    }
    utf8::append(out, fold(cp.value));
    pos += cp.length;
  }
  return out;
}

}  // namespace copypaste
