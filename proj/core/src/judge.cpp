#include "copypaste/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "copypaste/parallel.hpp"

namespace copypaste {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kA: return "A";
    case Verdict::kB: return "B";
    case Verdict::kTie: return "TIE";
  }
  return "TIE";
}

std::string_view to_string(JudgeDimension d) {
  return d == JudgeDimension::kTwist ? "twist" : "causal";
}

namespace {

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

std::optional<Verdict> verdict_word(std::string_view w) {
  std::string up(w);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "A") return Verdict::kA;
  if (up == "B") return Verdict::kB;
  if (up == "TIE") return Verdict::kTie;
  return std::nullopt;
}

std::optional<Verdict> keyed_verdict(std::string_view reply) {
  std::string lower(reply);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::size_t pos = 0;
  while ((pos = lower.find("verdict", pos)) != std::string::npos) {
    std::size_t i = pos + 7;
    pos = i;
    while (i < reply.size() && (reply[i] == '"' || reply[i] == '\'' || reply[i] == ' ')) ++i;
    if (i >= reply.size() || reply[i] != ':') continue;
    ++i;
    while (i < reply.size() && (reply[i] == ' ' || reply[i] == '"' || reply[i] == '\'' ||
                                reply[i] == '<' || reply[i] == '\t')) {
      ++i;
    }
    std::size_t j = i;
    while (j < reply.size() && word_char(reply[j])) ++j;
    if (auto v = verdict_word(reply.substr(i, j - i))) return v;
  }
  return std::nullopt;
}

}  // namespace

Parsed<Verdict> parse_verdict(std::string_view reply) {
  if (auto v = keyed_verdict(reply)) return *v;
  std::set<Verdict> seen;
  std::size_t i = 0;
  while (i < reply.size()) {
    if (!word_char(reply[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && word_char(reply[j])) ++j;
    const std::string_view w = reply.substr(i, j - i);
    if (w == "A") seen.insert(Verdict::kA);
    if (w == "B") seen.insert(Verdict::kB);
    if (w == "TIE") seen.insert(Verdict::kTie);
    i = j;
  }
  if (seen.size() == 1) return *seen.begin();
  if (seen.empty()) return FormatError{ErrorKind::kJudgeFormat, "no verdict in judge reply"};
  return FormatError{ErrorKind::kJudgeFormat, "judge reply names conflicting verdicts"};
}

std::pair<double, double> elo_update(double ra, double rb, Verdict outcome, double k) {
  const double expected_a = 1.0 / (1.0 + std::pow(10.0, (rb - ra) / 400.0));
  const double score_a = outcome == Verdict::kA ? 1.0 : outcome == Verdict::kB ? 0.0 : 0.5;
  const double delta = k * (score_a - expected_a);
  return {ra + delta, rb - delta};
}

double TournamentResult::aggregate_of(std::string_view candidate_id) const {
  for (const auto& r : aggregate) {
    if (r.candidate_id == candidate_id) return r.rating;
  }
  throw Error(ErrorKind::kInvalidArgument, "no rating for " + std::string(candidate_id));
}

Judge::Judge(llm::Client& client, const TemplateSet& templates)
    : client_(client), templates_(templates) {}

std::string Judge::render_prompt(std::string_view context, std::string_view resp_a,
                                 std::string_view resp_b, JudgeDimension dim) const {
  const auto& instruction =
      templates_.get(dim == JudgeDimension::kTwist ? tmpl::kJudgeTwist : tmpl::kJudgeCausal);
  return templates_.render(tmpl::kJudgePairwise, {{"instruction", instruction},
                                                  {"context", std::string(context)},
                                                  {"response_a", std::string(resp_a)},
                                                  {"response_b", std::string(resp_b)}});
}

PairVerdict Judge::compare_pair(std::string_view context, std::string_view resp_a,
                                std::string_view resp_b, JudgeDimension dim) {
  if (resp_a.empty() || resp_b.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "judge comparison needs two non-empty responses");
  }
  const auto first = parse_verdict(client_.ask(render_prompt(context, resp_a, resp_b, dim)).text);
  const auto swapped = parse_verdict(client_.ask(render_prompt(context, resp_b, resp_a, dim)).text);

  PairVerdict out;
  if (!first && !swapped) {
    out.format_error = true;
    return out;
  }
  if (!first || !swapped) {
    out.disagreement = true;
    return out;
  }
  // In the swapped run "A" names resp_b.
  const Verdict mapped = swapped.value() == Verdict::kA   ? Verdict::kB
                         : swapped.value() == Verdict::kB ? Verdict::kA
                                                          : Verdict::kTie;
  if (first.value() == mapped) {
    out.verdict = mapped;
  } else {
    out.disagreement = true;
  }
  return out;
}

TournamentResult Judge::run_tournament(const std::vector<Candidate>& candidates,
                                       std::string_view context,
                                       const std::vector<JudgeDimension>& dims,
                                       const TournamentConfig& config) {
  if (candidates.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "tournament needs at least two candidates");
  }
  if (dims.empty()) throw Error(ErrorKind::kInvalidArgument, "tournament needs a dimension");
  if (config.k <= 0.0) throw Error(ErrorKind::kInvalidArgument, "Elo K-factor must be > 0");
  if (config.passes < 1) throw Error(ErrorKind::kInvalidArgument, "tournament passes must be >= 1");

  std::vector<const Candidate*> order;
  for (const auto& c : candidates) order.push_back(&c);
  std::sort(order.begin(), order.end(),
            [](const Candidate* a, const Candidate* b) { return a->candidate_id < b->candidate_id; });

  TournamentResult result;
  for (int pass = 0; pass < config.passes; ++pass) {
    for (const auto dim : dims) {
      for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = i + 1; j < order.size(); ++j) {
          result.matches.push_back({order[i]->candidate_id, order[j]->candidate_id, dim, pass, {}});
        }
      }
    }
  }

  std::map<std::string_view, const Candidate*> by_id;
  for (const auto* c : order) by_id[c->candidate_id] = c;
  parallel_for(result.matches.size(), client_.options().max_in_flight, [&](std::size_t m) {
    auto& match = result.matches[m];
    try {
      match.verdict = compare_pair(context, by_id.at(match.a)->text, by_id.at(match.b)->text, match.dim);
    } catch (const Error&) {
      match.verdict = PairVerdict{Verdict::kTie, true, false};
    }
  });

  std::map<JudgeDimension, std::map<std::string, EloRating>> ratings;
  for (const auto dim : dims) {
    for (const auto* c : order) ratings[dim][c->candidate_id] = {c->candidate_id, config.initial, 0};
  }
  for (const auto& match : result.matches) {
    if (match.verdict.format_error) ++result.errored_matches;
    auto& ra = ratings[match.dim][match.a];
    auto& rb = ratings[match.dim][match.b];
    std::tie(ra.rating, rb.rating) = elo_update(ra.rating, rb.rating, match.verdict.verdict, config.k);
    ++ra.games;
    ++rb.games;
  }
  if (result.errored_matches == result.matches.size()) {
    throw Error(ErrorKind::kJudgeFormat, "every judge match failed to produce a verdict");
  }

  for (const auto* c : order) {
    EloRating agg{c->candidate_id, 0.0, 0};
    for (const auto dim : dims) {
      const auto& r = ratings[dim][c->candidate_id];
      result.per_dimension[dim].push_back(r);
      agg.rating += r.rating;
      agg.games += r.games;
    }
    agg.rating /= static_cast<double>(dims.size());
    result.aggregate.push_back(agg);
  }
  return result;
}

}  // namespace copypaste
