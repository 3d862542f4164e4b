#include "copypaste/evalkit.hpp"

#include <cctype>
#include <cstdio>

#include "copypaste/error.hpp"
#include "copypaste/serialization.hpp"
#include "copypaste/text_util.hpp"
#include "copypaste/textseg.hpp"

namespace copypaste {

using nlohmann::json;

void EvalItem::validate() const {
  pair.validate();
  std::string seen;
  for (const auto& opt : options) {
    if (opt.label < 'A' || opt.label > 'D') {
      throw Error(ErrorKind::kInvalidArgument,
                  "option label out of range in item " + pair.id + ": " + opt.label);
    }
    if (seen.find(opt.label) != std::string::npos) {
      throw Error(ErrorKind::kInvalidArgument, "duplicate option label in item " + pair.id);
    }
    seen.push_back(opt.label);
  }
  if (gold_label && seen.find(*gold_label) == std::string::npos) {
    throw Error(ErrorKind::kInvalidArgument, "gold label names no option in item " + pair.id);
  }
}

std::optional<char> parse_option_letter(std::string_view response) {
  auto is_alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  for (std::size_t i = 0; i < response.size(); ++i) {
    const char c = response[i];
    if (c < 'A' || c > 'D') continue;
    const bool left_ok = i == 0 || !is_alnum(response[i - 1]);
    const bool right_ok = i + 1 == response.size() || !is_alnum(response[i + 1]);
    if (left_ok && right_ok) return c;
  }
  return std::nullopt;
}

bool contains_normalized(std::string_view haystack, std::string_view needle) {
  const std::string h = normalize_whitespace(fold_case(haystack));
  const std::string n = normalize_whitespace(fold_case(needle));
  if (n.empty()) return false;
  return h.find(n) != std::string::npos;
}

EvalOutcome score_hit(const EvalItem& item, std::string response) {
  if (!item.gold_answer_text) {
    throw Error(ErrorKind::kInvalidArgument, "hit evaluation needs a gold answer: " + item.pair.id);
  }
  EvalOutcome out;
  out.item_id = item.pair.id;
  out.raw_response = std::move(response);
  if (trim(out.raw_response).empty()) {
    out.hit = false;
    out.flags.push_back("empty_response");
  } else {
    out.hit = contains_normalized(out.raw_response, *item.gold_answer_text);
  }
  return out;
}

EvalOutcome score_accuracy(const EvalItem& item, std::string response) {
  if (item.options.empty() || !item.gold_label) {
    throw Error(ErrorKind::kInvalidArgument,
                "accuracy evaluation needs options and a gold label: " + item.pair.id);
  }
  EvalOutcome out;
  out.item_id = item.pair.id;
  out.raw_response = std::move(response);
  out.chosen_label = parse_option_letter(out.raw_response);
  if (!out.chosen_label) {
    out.correct = false;
    out.flags.push_back("parse_failed");
  } else {
    out.correct = *out.chosen_label == *item.gold_label;
  }
  return out;
}

std::string Evaluator::hit_prompt(const EvalItem& item) const {
  return templates_.render(tmpl::kHitRate,
                           {{"context", item.pair.context}, {"question", item.pair.query}});
}

std::string Evaluator::accuracy_prompt(const EvalItem& item) const {
  std::string options;
  for (const auto& opt : item.options) {
    if (!options.empty()) options += '\n';
    options += opt.label;
    options += ". ";
    options += opt.text;
  }
  return templates_.render(tmpl::kAccuracy, {{"context", item.pair.context},
                                             {"question", item.pair.query},
                                             {"options", options}});
}

EvalOutcome Evaluator::eval_hit(const EvalItem& item) const {
  if (!item.gold_answer_text) {
    throw Error(ErrorKind::kInvalidArgument, "hit evaluation needs a gold answer: " + item.pair.id);
  }
  return score_hit(item, client_.ask(hit_prompt(item)).text);
}

EvalOutcome Evaluator::eval_accuracy(const EvalItem& item) const {
  if (item.options.empty() || !item.gold_label) {
    throw Error(ErrorKind::kInvalidArgument,
                "accuracy evaluation needs options and a gold label: " + item.pair.id);
  }
  return score_accuracy(item, client_.ask(accuracy_prompt(item)).text);
}

std::optional<double> EvalReport::hit_rate() const {
  if (hit_total == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(hit_total);
}

std::optional<double> EvalReport::accuracy() const {
  if (accuracy_total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(accuracy_total);
}

std::optional<double> EvalReport::parse_failure_rate() const {
  if (accuracy_total == 0) return std::nullopt;
  return static_cast<double>(parse_failures) / static_cast<double>(accuracy_total);
}

EvalReport aggregate(const std::vector<EvalOutcome>& outcomes) {
  if (outcomes.empty()) throw Error(ErrorKind::kEmpty, "no outcomes to aggregate");
  EvalReport r;
  r.total = outcomes.size();
  for (const auto& o : outcomes) {
    if (o.hit) {
      ++r.hit_total;
      if (*o.hit) ++r.hits;
    }
    if (o.correct) {
      ++r.accuracy_total;
      const bool parse_failed = !o.chosen_label;
      if (parse_failed) ++r.parse_failures;
      if (*o.correct && !parse_failed) ++r.correct;
    }
  }
  return r;
}

std::string report_csv(const EvalReport& report) {
  auto fmt = [](std::optional<double> v) -> std::string {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
  };
  std::string out =
      "total,hit_total,hits,hit_rate,accuracy_total,correct,accuracy,parse_failures,"
      "parse_failure_rate\n";
  out += std::to_string(report.total) + ',' + std::to_string(report.hit_total) + ',' +
         std::to_string(report.hits) + ',' + fmt(report.hit_rate()) + ',' +
         std::to_string(report.accuracy_total) + ',' + std::to_string(report.correct) + ',' +
         fmt(report.accuracy()) + ',' + std::to_string(report.parse_failures) + ',' +
         fmt(report.parse_failure_rate()) + '\n';
  return out;
}

namespace {

char label_from_json(const json& j) {
  const auto s = j.get<std::string>();
  if (s.size() != 1) throw Error(ErrorKind::kFormat, "option label must be one letter: " + s);
  return static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
}

}  // namespace

EvalItem eval_item_from_json(const json& j) {
  EvalItem item;
  item.pair = pair_from_json(j);
  try {
    if (j.contains("options")) {
      const auto& opts = j["options"];
      if (opts.is_object()) {
        for (const auto& [label, text] : opts.items()) {
          item.options.push_back({label_from_json(json(label)), text.get<std::string>()});
        }
      } else {
        for (const auto& o : opts) {
          if (o.is_array()) {
            item.options.push_back({label_from_json(o.at(0)), o.at(1).get<std::string>()});
          } else {
            item.options.push_back({label_from_json(o.at("label")), o.at("text").get<std::string>()});
          }
        }
      }
    }
    if (j.contains("gold_label") && !j["gold_label"].is_null()) {
      item.gold_label = label_from_json(j["gold_label"]);
    }
    if (j.contains("gold_answer_text") && !j["gold_answer_text"].is_null()) {
      item.gold_answer_text = j["gold_answer_text"].get<std::string>();
    } else if (item.pair.gold_answer) {
      item.gold_answer_text = item.pair.gold_answer;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("malformed eval item: ") + e.what());
  }
  item.validate();
  return item;
}

std::vector<EvalItem> read_eval_items(const std::filesystem::path& path) {
  std::vector<EvalItem> items;
  for (const auto& j : read_jsonl(path)) items.push_back(eval_item_from_json(j));
  return items;
}

json to_json(const EvalOutcome& o) {
  json j = {{"item_id", o.item_id}, {"raw_response", o.raw_response}};
  if (o.hit) j["hit"] = *o.hit;
  if (o.chosen_label) j["chosen_label"] = std::string(1, *o.chosen_label);
  if (o.correct) j["correct"] = *o.correct;
  if (!o.flags.empty()) j["flags"] = o.flags;
  return j;
}

}  // namespace copypaste
