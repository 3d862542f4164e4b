#include "copypaste/prefbuild.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "copypaste/parallel.hpp"
#include "copypaste/serialization.hpp"
#include "copypaste/text_util.hpp"

namespace copypaste {

std::string stamp_answer(std::string_view text, std::string_view answer) {
  std::string conclusion = render_template(kConclusionTemplate, {{"answer", std::string(answer)}});
  if (text.empty()) return trim(conclusion);
  return std::string(text) + conclusion;
}

std::string render_pair_prompt(const QueryContextPair& pair, const TemplateSet& templates) {
  return templates.render(tmpl::kAttributed, {{"context", pair.context}, {"query", pair.query}});
}

std::size_t SampleResult::survivors() const {
  return static_cast<std::size_t>(std::count_if(candidates.begin(), candidates.end(), [](const auto& c) {
    return c.status == CandidateStatus::kOk;
  }));
}

const Candidate& select_best(std::span<const Candidate> survivors) {
  if (survivors.empty()) throw Error(ErrorKind::kInvalidArgument, "no survivors to select from");
  const Candidate* best = &survivors.front();
  for (const auto& c : survivors.subspan(1)) {
    const double rc = c.elo.value_or(0.0);
    const double rb = best->elo.value_or(0.0);
    if (rc != rb) {
      if (rc > rb) best = &c;
      continue;
    }
    if (c.copy_score != best->copy_score) {
      if (c.copy_score > best->copy_score) best = &c;
      continue;
    }
    if (static_cast<int>(c.method) > static_cast<int>(best->method)) best = &c;
  }
  return *best;
}

std::vector<PreferencePair> emit_pairs(const QueryContextPair& pair,
                                       std::span<const Candidate> survivors, const Candidate& best,
                                       const std::string& prompt, std::vector<std::string>& flags) {
  std::vector<const Candidate*> others;
  for (const auto& c : survivors) {
    if (c.candidate_id != best.candidate_id) others.push_back(&c);
  }
  std::sort(others.begin(), others.end(), [](const Candidate* a, const Candidate* b) {
    return static_cast<int>(a->method) < static_cast<int>(b->method);
  });

  const bool stamping = pair.has_answers();
  const bool stamp = stamping && is_copypaste(best.method);
  if (stamping && !stamp) flags.push_back("best_not_copypaste_unstamped");

  std::vector<PreferencePair> out;
  const std::string chosen = stamp ? stamp_answer(best.text, *pair.gold_answer) : best.text;
  std::size_t wrong_index = 0;
  for (const Candidate* r : others) {
    PreferencePair p;
    p.prompt = prompt;
    p.pair_id = pair.id;
    p.chosen = chosen;
    p.chosen_method = best.method;
    p.rejected_method = r->method;
    p.stamped = stamp;
    if (stamp && is_copypaste(r->method)) {
      const auto& wrong = pair.wrong_answers[wrong_index++ % pair.wrong_answers.size()];
      p.rejected = stamp_answer(r->text, wrong);
      p.rejected_stamped = true;
    } else {
      p.rejected = r->text;
    }
    if (p.rejected == p.chosen) {
      flags.push_back("identical_rejected_dropped=" + std::string(to_string(r->method)));
      continue;
    }
    out.push_back(std::move(p));
  }
  return out;
}

SampleResult build_sample(const QueryContextPair& pair, const PipelineSettings& settings,
                          PipelineServices& services) {
  pair.validate();
  SampleResult result;
  result.pair_id = pair.id;
  result.candidates.resize(kAllMethods.size());

  PromptGenerator generator(services.generator, services.templates, settings.generation);
  parallel_for(kAllMethods.size(), settings.concurrency, [&](std::size_t i) {
    result.candidates[i] = generator.generate_candidate(pair, kAllMethods[i]);
  });

  parallel_for(result.candidates.size(), settings.concurrency, [&](std::size_t i) {
    Candidate& c = result.candidates[i];
    if (c.status != CandidateStatus::kOk) return;
    c.scorecard = score_candidate(c, pair, services.scorers, services.embedder, settings.criteria);
    if (!c.scorecard->passed) c.status = CandidateStatus::kFilteredOut;
  });

  std::vector<Candidate> survivors;
  for (const auto& c : result.candidates) {
    if (c.status == CandidateStatus::kOk) survivors.push_back(c);
  }
  if (survivors.size() < 2) {
    result.skipped = true;
    result.skip_reason = "insufficient survivors";
    return result;
  }

  Judge judge(services.judge, services.templates);
  try {
    result.tournament = judge.run_tournament(survivors, pair.context, settings.dimensions, settings.elo);
  } catch (const Error& e) {
    result.skipped = true;
    result.skip_reason = std::string("tournament failed: ") + e.what();
    return result;
  }
  if (result.tournament->errored_matches > 0) {
    result.flags.push_back("judge_errors=" + std::to_string(result.tournament->errored_matches));
  }
  for (auto& c : survivors) c.elo = result.tournament->aggregate_of(c.candidate_id);
  for (auto& c : result.candidates) {
    if (c.status == CandidateStatus::kOk) c.elo = result.tournament->aggregate_of(c.candidate_id);
  }

  const Candidate& best = select_best(survivors);
  result.best_candidate = best.candidate_id;
  result.pairs = emit_pairs(pair, survivors, best, render_pair_prompt(pair, services.templates),
                            result.flags);
  if (result.pairs.empty()) {
    result.skipped = true;
    result.skip_reason = "no distinct rejected responses";
  }
  return result;
}

std::size_t export_dataset(std::span<const PreferencePair> pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write dataset " + path.string());
  for (const auto& p : pairs) out << to_json(p).dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
  return pairs.size();
}

std::vector<PreferencePair> read_dataset(const std::filesystem::path& path) {
  std::vector<PreferencePair> pairs;
  for (const auto& j : read_jsonl(path)) pairs.push_back(preference_pair_from_json(j));
  return pairs;
}

}  // namespace copypaste
