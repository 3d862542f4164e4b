#include "copypaste/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "copypaste/error.hpp"
#include "copypaste/http_backend.hpp"
#include "copypaste/promptgen.hpp"
#include "copypaste/text_util.hpp"
#include "copypaste/textseg.hpp"

namespace copypaste {

void FilterCriterion::validate() const {
  if (!std::isfinite(threshold)) {
    throw Error(ErrorKind::kConfig, "non-finite threshold for " + std::string(to_string(metric)));
  }
  const Direction expected =
      metric == MetricId::kFluencyPpl ? Direction::kAtMost : Direction::kAtLeast;
  if (direction != expected) {
    throw Error(ErrorKind::kConfig, std::string(to_string(metric)) + " must use " +
                                        (expected == Direction::kAtMost ? "at_most" : "at_least"));
  }
}

bool FilterCriterion::accepts(double value) const {
  if (std::isnan(value)) return false;
  return direction == Direction::kAtLeast ? value >= threshold : value <= threshold;
}

std::vector<FilterCriterion> default_criteria() {
  return {{MetricId::kFaithDoc, 0.6, Direction::kAtLeast, ErrorPolicy::kFailClosed},
          {MetricId::kFaithSent, 0.6, Direction::kAtLeast, ErrorPolicy::kFailClosed},
          {MetricId::kCoverage, 0.5, Direction::kAtLeast, ErrorPolicy::kFailClosed},
          {MetricId::kDensity, 2.0, Direction::kAtLeast, ErrorPolicy::kFailClosed},
          {MetricId::kRelevance, 0.5, Direction::kAtLeast, ErrorPolicy::kFailClosed},
          {MetricId::kFluencyPpl, 60.0, Direction::kAtMost, ErrorPolicy::kFailClosed}};
}

HttpScorer::HttpScorer(std::string url, bool text_only, std::chrono::seconds timeout)
    : url_(std::move(url)), text_only_(text_only), timeout_(timeout) {}

double HttpScorer::parse_payload(const std::string& payload) {
  try {
    const auto j = nlohmann::json::parse(payload);
    const double v = j.at("score").get<double>();
    if (!std::isfinite(v)) throw Error(ErrorKind::kScorer, "scorer returned a non-finite score");
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(ErrorKind::kProtocol, std::string("malformed scorer payload: ") + e.what(),
                       payload);
  }
}

double HttpScorer::score(std::string_view context, std::string_view claim) {
  nlohmann::json body;
  if (text_only_) {
    body = {{"text", claim}};
  } else {
    body = {{"context", context}, {"claim", claim}};
  }
  const HttpResult res = http_post_json(url_, body.dump(), {}, timeout_);
  if (res.status != 200) {
    throw BackendError(ErrorKind::kScorer, "scorer " + url_ + " returned HTTP " + std::to_string(res.status),
                       res.body, res.status);
  }
  return parse_payload(res.body);
}

double LexicalOverlapScorer::score(std::string_view context, std::string_view claim) {
  const TokenSeq ctx = tokenize(context);
  const TokenSeq cl = tokenize(claim);
  if (cl.content().empty()) return 0.0;
  const std::set<std::string> vocab(ctx.content().begin(), ctx.content().end());
  std::size_t hits = 0;
  for (const auto& s : cl.content()) hits += vocab.count(s);
  return static_cast<double>(hits) / static_cast<double>(cl.content().size());
}

namespace {

template <typename Fn>
void record(ScoreCard& card, MetricId metric, Fn&& fn) {
  try {
    card.scores[metric] = fn();
  } catch (const std::exception& e) {
    card.scores[metric] = std::nullopt;
    card.errors[metric] = e.what();
  }
}

}  // namespace

ScoreCard score_candidate(const Candidate& cand, const QueryContextPair& pair, ScorerSet& scorers,
                          llm::Client& client, std::span<const FilterCriterion> criteria) {
  ScoreCard card;
  card.candidate_id = cand.candidate_id;
  const std::string claim =
      cand.method == CandidateMethod::kCitations ? strip_citations(cand.text) : cand.text;

  const CopyMetrics m = answer_metrics(pair.context, claim);
  card.scores[MetricId::kCoverage] = m.coverage;
  card.scores[MetricId::kDensity] = m.density;

  auto require = [](const std::shared_ptr<Scorer>& s, MetricId id) -> Scorer& {
    if (!s) throw Error(ErrorKind::kScorer, "no scorer configured for " + std::string(to_string(id)));
    return *s;
  };
  record(card, MetricId::kFaithDoc,
         [&] { return require(scorers.faith_doc, MetricId::kFaithDoc).score(pair.context, claim); });
  record(card, MetricId::kFaithSent, [&] {
    Scorer& s = require(scorers.faith_sent, MetricId::kFaithSent);
    auto sentences = split_sentences(claim);
    if (sentences.empty()) throw Error(ErrorKind::kScorer, "candidate has no sentences");
    double acc = scorers.sentence_aggregate == SentenceAggregate::kMin
                     ? std::numeric_limits<double>::infinity()
                     : 0.0;
    for (const auto& sentence : sentences) {
      const double v = s.score(pair.context, sentence);
      acc = scorers.sentence_aggregate == SentenceAggregate::kMin ? std::min(acc, v) : acc + v;
    }
    if (scorers.sentence_aggregate == SentenceAggregate::kMean) {
      acc /= static_cast<double>(sentences.size());
    }
    return acc;
  });
  record(card, MetricId::kRelevance,
         [&] { return llm::cosine(client.embed(pair.query), client.embed(claim)); });
  record(card, MetricId::kFluencyPpl,
         [&] { return require(scorers.fluency, MetricId::kFluencyPpl).score({}, claim); });

  evaluate_card(card, criteria);
  return card;
}

void evaluate_card(ScoreCard& card, std::span<const FilterCriterion> criteria) {
  card.failed_criteria.clear();
  for (const auto& c : criteria) {
    const auto it = card.scores.find(c.metric);
    bool ok = false;
    if (it == card.scores.end() || !it->second) {
      ok = c.on_error == ErrorPolicy::kFailOpen;
    } else {
      ok = c.accepts(*it->second);
    }
    if (!ok && std::find(card.failed_criteria.begin(), card.failed_criteria.end(), c.metric) ==
                   card.failed_criteria.end()) {
      card.failed_criteria.push_back(c.metric);
    }
  }
  card.passed = card.failed_criteria.empty();
}

std::vector<std::string> apply_filter(std::span<ScoreCard> cards,
                                      std::span<const FilterCriterion> criteria) {
  if (criteria.empty()) throw Error(ErrorKind::kInvalidArgument, "filter needs at least one criterion");
  std::vector<std::string> survivors;
  for (auto& card : cards) {
    evaluate_card(card, criteria);
    if (card.passed) survivors.push_back(card.candidate_id);
  }
  return survivors;
}

}  // namespace copypaste
