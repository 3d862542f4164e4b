#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace copypaste {

std::string trim(std::string_view s);

/// Collapses every run of whitespace to one space and trims both ends.
std::string normalize_whitespace(std::string_view s);

/// ASCII lower-casing plus whitespace normalization.
std::string normalize_for_match(std::string_view s);

/// Splits prose into sentences at '.', '!' or '?' (optionally followed by
/// closing quotes or brackets) when whitespace follows, and at blank lines.
std::vector<std::string> split_sentences(std::string_view text);

/// Removes bracketed citation markers such as "[1]" or "[2, 3]".
std::string strip_citations(std::string_view text);

std::vector<std::string> split_lines(std::string_view text);

std::size_t count_words(std::string_view text);

/// Keeps at most max_words whitespace-separated words.
std::string truncate_words(std::string_view text, std::size_t max_words);

/// Replaces every "{name}" with its value; unknown placeholders are kept.
std::string render_template(
    std::string_view tmpl,
    const std::vector<std::pair<std::string, std::string>>& values);

std::string sha256_hex(std::string_view data);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace copypaste
