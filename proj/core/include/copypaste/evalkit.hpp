#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "copypaste/llmclient.hpp"
#include "copypaste/templates.hpp"
#include "copypaste/types.hpp"

namespace copypaste {

struct EvalOption {
  char label = 'A';
  std::string text;
};

struct EvalItem {
  QueryContextPair pair;
  std::vector<EvalOption> options;
  std::optional<char> gold_label;
  std::optional<std::string> gold_answer_text;

  /// Throws Error(kInvalidArgument) on duplicate or out-of-range labels, or a
  /// gold label that names no option.
  void validate() const;
};

struct EvalOutcome {
  std::string item_id;
  std::optional<bool> hit;
  std::optional<char> chosen_label;
  std::optional<bool> correct;
  std::string raw_response;
  std::vector<std::string> flags;  // "empty_response", "parse_failed"
};

/// First standalone A, B, C or D in the response ("C", "(C)", "C." count;
/// the "A" of "Answer" does not).
std::optional<char> parse_option_letter(std::string_view response);

/// Case-insensitive, whitespace-normalized substring test.
bool contains_normalized(std::string_view haystack, std::string_view needle);

class Evaluator {
 public:
  Evaluator(llm::Client& client, const TemplateSet& templates)
      : client_(client), templates_(templates) {}

  EvalOutcome eval_hit(const EvalItem& item) const;
  EvalOutcome eval_accuracy(const EvalItem& item) const;

  std::string hit_prompt(const EvalItem& item) const;
  std::string accuracy_prompt(const EvalItem& item) const;

 private:
  llm::Client& client_;
  const TemplateSet& templates_;
};

/// Pure scoring steps, split out so they can be checked without a client.
EvalOutcome score_hit(const EvalItem& item, std::string response);
EvalOutcome score_accuracy(const EvalItem& item, std::string response);

struct EvalReport {
  std::size_t total = 0;
  std::size_t hit_total = 0;
  std::size_t hits = 0;
  std::size_t accuracy_total = 0;
  std::size_t correct = 0;
  std::size_t parse_failures = 0;

  std::optional<double> hit_rate() const;
  std::optional<double> accuracy() const;
  std::optional<double> parse_failure_rate() const;
};

/// Throws Error(kEmpty) for no outcomes.
EvalReport aggregate(const std::vector<EvalOutcome>& outcomes);

/// Header row plus one data row; a rate without items in its mode is empty.
std::string report_csv(const EvalReport& report);

EvalItem eval_item_from_json(const nlohmann::json& j);
std::vector<EvalItem> read_eval_items(const std::filesystem::path& path);
nlohmann::json to_json(const EvalOutcome& outcome);

}  // namespace copypaste
