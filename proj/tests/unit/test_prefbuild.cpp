#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "copypaste/prefbuild.hpp"
#include "support.hpp"
#include "temp_dir.hpp"

namespace copypaste {
namespace {

namespace fs = std::filesystem;

const std::string kContext =
    "The sky is blue on clear days. Sunlight scatters off air molecules in the atmosphere. "
    "Shorter blue wavelengths scatter much more strongly than the longer red wavelengths do.";

QueryContextPair make_pair(bool with_answers) {
  QueryContextPair p{"p1", "Why is the sky blue?", kContext, std::nullopt, {}};
  if (with_answers) {
    p.gold_answer = "Rayleigh scattering";
    p.wrong_answers = {"ocean reflection"};
  }
  return p;
}

struct Pipeline {
  std::shared_ptr<llm::MockBackend> backend = testing::pipeline_backend();
  llm::Client client{backend, testing::fast_options()};
  TemplateSet templates;
  PipelineServices services{client, client, client, templates, {}};
  PipelineSettings settings = [] {
    PipelineSettings s;
    s.criteria = {{MetricId::kCoverage, 0.0, Direction::kAtLeast}};
    return s;
  }();
};

TEST(StampAnswer, Examples) {
  EXPECT_EQ(stamp_answer("Reasoning...", "42"), "Reasoning...\n\nTherefore, the answer is: 42");
  EXPECT_EQ(stamp_answer("The answer is 42\n42", "42"),
            "The answer is 42\n42\n\nTherefore, the answer is: 42");
  EXPECT_EQ(stamp_answer("", "42"), "Therefore, the answer is: 42");
}

TEST(BuildSample, AllSixSurviveGivesFivePairs) {
  Pipeline p;
  const auto pair = make_pair(true);
  const SampleResult r = build_sample(pair, p.settings, p.services);
  ASSERT_FALSE(r.skipped) << r.skip_reason;
  EXPECT_EQ(r.survivors(), 6u);
  ASSERT_EQ(r.pairs.size(), 5u);
  EXPECT_EQ(*r.best_candidate, "p1/cp_refine");

  std::map<CandidateMethod, const Candidate*> by_method;
  for (const auto& c : r.candidates) by_method[c.method] = &c;
  for (const auto& pp : r.pairs) {
    EXPECT_EQ(pp.chosen_method, CandidateMethod::kCPRefine);
    EXPECT_EQ(pp.chosen, stamp_answer(by_method[CandidateMethod::kCPRefine]->text, "Rayleigh scattering"));
    EXPECT_TRUE(pp.stamped);
    const Candidate& rej = *by_method[pp.rejected_method];
    if (is_copypaste(pp.rejected_method)) {
      EXPECT_EQ(pp.rejected, stamp_answer(rej.text, "ocean reflection"));
    } else {
      EXPECT_EQ(pp.rejected, rej.text);
    }
    EXPECT_NE(pp.prompt.find(pair.query), std::string::npos);
    EXPECT_NE(pp.prompt.find(pair.context), std::string::npos);
    // Chosen dominance.
    EXPECT_GE(*by_method[CandidateMethod::kCPRefine]->elo, *rej.elo);
  }
  std::vector<CandidateMethod> rejected;
  for (const auto& pp : r.pairs) rejected.push_back(pp.rejected_method);
  EXPECT_EQ(rejected, (std::vector<CandidateMethod>{CandidateMethod::kBase, CandidateMethod::kAttributed,
                                                    CandidateMethod::kCitations, CandidateMethod::kCPOrder,
                                                    CandidateMethod::kCPLink}));
}

TEST(BuildSample, NoGoldThreeSurvivorsGivesTwoUnmodifiedPairs) {
  Pipeline p;
  // Only verbatim candidates keep full coverage: the link transition word
  // and the baselines' own words are not in the context.
  p.settings.criteria = {{MetricId::kCoverage, 0.99, Direction::kAtLeast}};
  p.backend->set_chat([](const llm::ChatRequest& req) {
    llm::ChatResponse r;
    const std::string prompt = llm::prompt_text(req);
    r.text = testing::pipeline_reply(prompt);
    if (prompt.find("numbered passages") != std::string::npos) r.text = "Something else [1].";
    return r;
  });
  const SampleResult r = build_sample(make_pair(false), p.settings, p.services);
  ASSERT_FALSE(r.skipped) << r.skip_reason;
  EXPECT_EQ(r.survivors(), 3u);  // attributed, cp_order, cp_refine
  ASSERT_EQ(r.pairs.size(), 2u);
  for (const auto& pp : r.pairs) {
    EXPECT_FALSE(pp.stamped);
    EXPECT_FALSE(pp.rejected_stamped);
    EXPECT_EQ(pp.chosen.find("Therefore"), std::string::npos);
  }
}

Candidate ranked(CandidateMethod m, std::string text, double elo) {
  Candidate c;
  c.pair_id = "p1";
  c.method = m;
  c.candidate_id = Candidate::make_id("p1", m);
  c.text = std::move(text);
  c.elo = elo;
  return c;
}

TEST(EmitPairs, NoGoldThreeSurvivors) {
  const std::vector<Candidate> survivors = {ranked(CandidateMethod::kBase, "b", 1490),
                                            ranked(CandidateMethod::kCPOrder, "o", 1520),
                                            ranked(CandidateMethod::kCPLink, "l", 1490)};
  std::vector<std::string> flags;
  const auto pairs = emit_pairs(make_pair(false), survivors, select_best(survivors), "prompt", flags);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].chosen, "o");
  EXPECT_EQ(pairs[0].rejected, "b");
  EXPECT_EQ(pairs[1].rejected, "l");
  EXPECT_TRUE(flags.empty());
}

TEST(EmitPairs, BaselineBestIsUnstampedAndFlagged) {
  const std::vector<Candidate> survivors = {ranked(CandidateMethod::kBase, "b", 1550),
                                            ranked(CandidateMethod::kCPOrder, "o", 1450)};
  std::vector<std::string> flags;
  const auto pairs = emit_pairs(make_pair(true), survivors, select_best(survivors), "prompt", flags);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].chosen, "b");
  EXPECT_EQ(pairs[0].rejected, "o");
  EXPECT_FALSE(pairs[0].stamped);
  EXPECT_EQ(flags, std::vector<std::string>{"best_not_copypaste_unstamped"});
}

TEST(EmitPairs, WrongAnswersRoundRobin) {
  auto pair = make_pair(true);
  pair.wrong_answers = {"w1", "w2"};
  const std::vector<Candidate> survivors = {ranked(CandidateMethod::kCPOrder, "o", 1400),
                                            ranked(CandidateMethod::kCPLink, "l", 1400),
                                            ranked(CandidateMethod::kCPRefine, "r", 1600)};
  std::vector<std::string> flags;
  const auto pairs = emit_pairs(pair, survivors, select_best(survivors), "prompt", flags);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].rejected, stamp_answer("o", "w1"));
  EXPECT_EQ(pairs[1].rejected, stamp_answer("l", "w2"));
}

TEST(SelectBest, TieBreaks) {
  std::vector<Candidate> c = {ranked(CandidateMethod::kCPOrder, "o", 1500),
                              ranked(CandidateMethod::kCPRefine, "r", 1500)};
  c[0].copy_score = 0.9;
  c[1].copy_score = 0.8;
  EXPECT_EQ(select_best(c).method, CandidateMethod::kCPOrder);
  c[1].copy_score = 0.9;
  EXPECT_EQ(select_best(c).method, CandidateMethod::kCPRefine);
}

TEST(BuildSample, OneSurvivorIsSkipped) {
  Pipeline p;
  p.backend->set_chat([](const llm::ChatRequest& req) {
    llm::ChatResponse r;
    const std::string prompt = llm::prompt_text(req);
    const bool attributed = prompt.find("strictly based on the following context") != std::string::npos;
    r.text = attributed ? "The sky is blue on clear days." : "";
    return r;
  });
  const SampleResult r = build_sample(make_pair(true), p.settings, p.services);
  EXPECT_TRUE(r.skipped);
  EXPECT_EQ(r.skip_reason, "insufficient survivors");
  EXPECT_TRUE(r.pairs.empty());
}

using testing::TempDir;

TEST(ExportDataset, RoundTripAndSchema) {
  Pipeline p;
  const SampleResult r = build_sample(make_pair(true), p.settings, p.services);
  TempDir dir;
  const fs::path out = dir.path() / "prefs.jsonl";
  EXPECT_EQ(export_dataset(r.pairs, out), 5u);
  EXPECT_EQ(read_dataset(out), r.pairs);

  std::ifstream in(out);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"prompt", "chosen", "rejected", "pair_id", "chosen_method",
                            "rejected_method", "stamped"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
  }
  EXPECT_EQ(lines, 5u);
}

TEST(ExportDataset, EmptyAndUnwritable) {
  TempDir dir;
  const fs::path out = dir.path() / "empty.jsonl";
  EXPECT_EQ(export_dataset({}, out), 0u);
  EXPECT_EQ(fs::file_size(out), 0u);
  try {
    export_dataset({}, dir.path() / "missing" / "x.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

}  // namespace
}  // namespace copypaste
