#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "copypaste/error.hpp"
#include "copypaste/evalkit.hpp"
#include "support.hpp"

namespace copypaste {
namespace {

EvalItem item(std::optional<char> gold_label = 'B', std::optional<std::string> gold = "New York") {
  EvalItem it;
  it.pair = {"i1", "Which city?", "The meeting was held in New York.", std::nullopt, {}};
  it.options = {{'A', "Boston"}, {'B', "New York"}, {'C', "Chicago"}, {'D', "unknown"}};
  it.gold_label = gold_label;
  it.gold_answer_text = std::move(gold);
  return it;
}

TEST(Hit, Examples) {
  EXPECT_TRUE(*score_hit(item(), "It was in New York, clearly.").hit);
  EXPECT_FALSE(*score_hit(item(), "It was in Boston.").hit);
  EXPECT_TRUE(*score_hit(item(), "new  york").hit);
  const auto empty = score_hit(item(), "  ");
  EXPECT_FALSE(*empty.hit);
  EXPECT_EQ(empty.flags, std::vector<std::string>{"empty_response"});
  EXPECT_FALSE(empty.correct.has_value());
}

TEST(Accuracy, Examples) {
  const auto b = score_accuracy(item(), "B");
  EXPECT_EQ(b.chosen_label, 'B');
  EXPECT_TRUE(*b.correct);
  const auto c = score_accuracy(item('C'), "The answer is C.");
  EXPECT_EQ(c.chosen_label, 'C');
  EXPECT_TRUE(*c.correct);
  const auto maybe = score_accuracy(item(), "maybe");
  EXPECT_FALSE(*maybe.correct);
  EXPECT_FALSE(maybe.chosen_label);
  EXPECT_EQ(maybe.flags, std::vector<std::string>{"parse_failed"});
  EXPECT_FALSE(maybe.hit.has_value());
}

TEST(ParseOptionLetter, Standalone) {
  EXPECT_EQ(parse_option_letter("(C)"), 'C');
  EXPECT_EQ(parse_option_letter("Answer: D"), 'D');
  EXPECT_EQ(parse_option_letter("A. Boston"), 'A');
  EXPECT_FALSE(parse_option_letter("Eventually"));
  EXPECT_FALSE(parse_option_letter("E"));
  EXPECT_FALSE(parse_option_letter(""));
}

TEST(Evaluator, PromptsAndClient) {
  auto backend = llm::MockBackend::replying("B");
  llm::Client client(backend, testing::fast_options());
  TemplateSet templates;
  Evaluator ev(client, templates);
  const std::string acc = ev.accuracy_prompt(item());
  EXPECT_NE(acc.find("A. Boston\nB. New York\nC. Chicago\nD. unknown"), std::string::npos);
  EXPECT_NE(acc.find("single token"), std::string::npos);
  EXPECT_NE(ev.hit_prompt(item()).find("step-by-step"), std::string::npos);
  EXPECT_TRUE(*ev.eval_accuracy(item()).correct);
  EXPECT_FALSE(*ev.eval_hit(item()).hit);
  EXPECT_EQ(ev.eval_hit(item()).raw_response, "B");
}

TEST(Aggregate, Examples) {
  std::vector<EvalOutcome> outs;
  for (int i = 0; i < 4; ++i) outs.push_back(score_accuracy(item(), i < 3 ? "B" : "A"));
  const auto r = aggregate(outs);
  EXPECT_DOUBLE_EQ(*r.accuracy(), 0.75);
  EXPECT_FALSE(r.hit_rate());
  EXPECT_THROW(aggregate({}), Error);

  outs.push_back(score_hit(item(), "New York"));
  outs.push_back(score_hit(item(), "Boston"));
  outs.push_back(score_accuracy(item(), "dunno"));
  const auto mixed = aggregate(outs);
  EXPECT_EQ(mixed.total, 7u);
  EXPECT_EQ(mixed.hit_total, 2u);
  EXPECT_DOUBLE_EQ(*mixed.hit_rate(), 0.5);
  EXPECT_DOUBLE_EQ(*mixed.accuracy(), 3.0 / 5.0);
  EXPECT_EQ(mixed.parse_failures, 1u);
  EXPECT_EQ(report_csv(mixed),
            "total,hit_total,hits,hit_rate,accuracy_total,correct,accuracy,parse_failures,"
            "parse_failure_rate\n7,2,1,0.500000,5,3,0.600000,1,0.200000\n");
  EXPECT_EQ(report_csv(r).substr(report_csv(r).find('\n') + 1), "4,0,0,,4,3,0.750000,0,0.000000\n");
}

TEST(AggregateProperty, PermutationInvariantAndParseFailuresNeverCorrect) {
  std::mt19937 rng(17);
  const std::vector<std::string> replies = {"A", "B", "C", "D", "none", "B.", "(A)", "New York", ""};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EvalOutcome> outs;
    for (int i = 0; i < 20; ++i) {
      const auto& reply = replies[rng() % replies.size()];
      outs.push_back(rng() % 2 ? score_accuracy(item(), reply) : score_hit(item(), reply));
    }
    for (const auto& o : outs) {
      if (std::find(o.flags.begin(), o.flags.end(), "parse_failed") != o.flags.end()) {
        EXPECT_FALSE(*o.correct);
      }
    }
    const auto base = aggregate(outs);
    std::shuffle(outs.begin(), outs.end(), rng);
    const auto shuffled = aggregate(outs);
    EXPECT_EQ(base.hit_rate(), shuffled.hit_rate());
    EXPECT_EQ(base.accuracy(), shuffled.accuracy());
  }
}

TEST(EvalItemJson, OptionShapes) {
  using nlohmann::json;
  const auto obj = eval_item_from_json(json::parse(
      R"({"id": "x", "query": "q", "context": "c", "options": {"A": "one", "B": "two"},
          "gold_label": "B", "gold_answer": "two"})"));
  ASSERT_EQ(obj.options.size(), 2u);
  EXPECT_EQ(obj.options[1].text, "two");
  EXPECT_EQ(obj.gold_label, 'B');
  EXPECT_EQ(obj.gold_answer_text, "two");

  const auto pairs = eval_item_from_json(json::parse(
      R"({"id": "x", "query": "q", "context": "c", "options": [["A", "one"], ["B", "two"]]})"));
  EXPECT_EQ(pairs.options[0].label, 'A');
  const auto records = eval_item_from_json(json::parse(
      R"({"id": "x", "query": "q", "context": "c",
          "options": [{"label": "A", "text": "one"}], "gold_label": "A"})"));
  EXPECT_EQ(records.options[0].text, "one");

  EXPECT_THROW(eval_item_from_json(json::parse(
                   R"({"id": "x", "query": "q", "context": "c", "options": [["A", "1"]],
                       "gold_label": "C"})")),
               Error);
  EXPECT_THROW(eval_item_from_json(json::parse(
                   R"({"id": "x", "query": "q", "context": "c",
                       "options": [["A", "1"], ["A", "2"]]})")),
               Error);
}

TEST(EvalOutcomeJson, Fields) {
  const auto j = to_json(score_accuracy(item(), "B"));
  EXPECT_EQ(j.at("chosen_label"), "B");
  EXPECT_EQ(j.at("correct"), true);
  EXPECT_FALSE(j.contains("hit"));
}

}  // namespace
}  // namespace copypaste
