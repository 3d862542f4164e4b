#include <gtest/gtest.h>

#include <atomic>
#include <functional>
#include <string>
#include <vector>

#include "copypaste/error.hpp"
#include "copypaste/promptgen.hpp"
#include "copypaste/text_util.hpp"
#include "support.hpp"

namespace copypaste {
namespace {

using llm::ChatRequest;
using llm::ChatResponse;
using llm::MockBackend;
using testing::between;
using testing::fast_options;

const std::string kContext =
    "The sky is blue. Water boils at 100 degrees at sea level. Ice melts at 0 degrees.";

QueryContextPair make_pair(std::string context = kContext) {
  return {"q1", "What colour is the sky?", std::move(context), std::nullopt, {}};
}

struct Harness {
  explicit Harness(std::function<std::string(const std::string&)> reply,
                   GenerationSettings settings = {})
      : backend(std::make_shared<MockBackend>([reply](const ChatRequest& req) {
          ChatResponse r;
          r.text = reply(llm::prompt_text(req));
          return r;
        })),
        client(backend, fast_options()),
        gen(client, templates, settings) {}

  std::shared_ptr<MockBackend> backend;
  llm::Client client;
  TemplateSet templates;
  PromptGenerator gen;
};

std::vector<ExtractedSentence> two_sentences() {
  return {{"SENT_1", "The sky is blue.", true},
          {"SENT_2", "Water boils at 100 degrees at sea level.", true}};
}

TEST(ParseExtracted, PrefixRequired) {
  EXPECT_EQ(parse_extracted("EXTRACTED: A.\nnoise\n  EXTRACTED:   B.  \nEXTRACTED:"),
            (std::vector<std::string>{"A.", "B."}));
  EXPECT_TRUE(parse_extracted("The sky is blue.").empty());
}

TEST(ExtractSentences, VerbatimEcho) {
  Harness h([](const std::string&) { return "EXTRACTED: The sky is blue."; });
  const Extraction ex = h.gen.extract_sentences(make_pair());
  ASSERT_EQ(ex.sentences.size(), 1u);
  EXPECT_EQ(ex.sentences[0].sent_id, "SENT_1");
  EXPECT_TRUE(ex.sentences[0].verified_in_context);
  EXPECT_EQ(ex.dropped, 0u);
}

TEST(ExtractSentences, ParaphraseIsDropped) {
  Harness h([](const std::string&) {
    return "EXTRACTED: The sky is blue.\nEXTRACTED: Water boils at one hundred degrees.";
  });
  const Extraction ex = h.gen.extract_sentences(make_pair());
  EXPECT_EQ(ex.sentences.size(), 1u);
  EXPECT_EQ(ex.dropped, 1u);
}

TEST(ExtractSentences, CaseSensitiveWhitespaceInsensitive) {
  Harness h([](const std::string&) {
    return "EXTRACTED: the sky is blue.\nEXTRACTED: Ice   melts at 0 degrees.";
  });
  const Extraction ex = h.gen.extract_sentences(make_pair());
  ASSERT_EQ(ex.sentences.size(), 1u);
  EXPECT_EQ(ex.sentences[0].text, "Ice melts at 0 degrees.");
}

TEST(ExtractSentences, NothingVerifiedFails) {
  Harness h([](const std::string&) { return "The sky is blue."; });
  try {
    h.gen.extract_sentences(make_pair());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kExtractionFailed);
  }
}

TEST(CpOrder, DirectParse) {
  Harness h([](const std::string&) { return "ORDER: SENT_2,SENT_1"; });
  EXPECT_EQ(h.gen.cp_order(make_pair(), two_sentences()),
            "Water boils at 100 degrees at sea level. The sky is blue.");
}

TEST(CpOrder, MissingIdIsAppended) {
  Harness h([](const std::string&) { return "ORDER: SENT_2"; });
  EXPECT_EQ(h.gen.cp_order(make_pair(), two_sentences()),
            "Water boils at 100 degrees at sea level. The sky is blue.");
}

TEST(CpOrder, UnknownIdDropped) {
  Harness h([](const std::string&) { return "ORDER: SENT_9,SENT_1"; });
  EXPECT_EQ(h.gen.cp_order(make_pair(), two_sentences()),
            "The sky is blue. Water boils at 100 degrees at sea level.");
}

TEST(CpOrder, NoOrderLineIsFormatError) {
  Harness h([](const std::string&) { return "I think SENT_1 first."; });
  try {
    h.gen.cp_order(make_pair(), two_sentences());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
}

TEST(RepairOrder, DropsDuplicatesKeepsOriginalOrderForMissing) {
  EXPECT_EQ(repair_order({"SENT_3", "SENT_3", "X"}, {"SENT_1", "SENT_2", "SENT_3"}),
            (std::vector<std::string>{"SENT_3", "SENT_1", "SENT_2"}));
}

TEST(ParseOrder, Lenient) {
  const auto p = parse_order("Sure!\nORDER: [sent_2, SENT_1]");
  ASSERT_TRUE(p);
  EXPECT_EQ(p.value(), (std::vector<std::string>{"SENT_2", "SENT_1"}));
  EXPECT_FALSE(parse_order("ORDER:   "));
}

TEST(CpLink, SingleTransition) {
  Harness h([](const std::string&) { return "[TRANSITION_1_2]Moreover,[/TRANSITION_1_2]"; });
  const LinkResult r = h.gen.cp_link(make_pair(), two_sentences());
  EXPECT_EQ(r.text, "The sky is blue. Moreover, Water boils at 100 degrees at sea level.");
  EXPECT_FALSE(r.fallback);
}

TEST(CpLink, NoMarkersFallsBack) {
  Harness h([](const std::string&) { return "Here you go."; });
  const LinkResult r = h.gen.cp_link(make_pair(), two_sentences());
  EXPECT_EQ(r.text, "The sky is blue. Water boils at 100 degrees at sea level.");
  EXPECT_TRUE(r.fallback);
}

TEST(CpLink, IntroAndConclusionOnly) {
  Harness h([](const std::string&) {
    return "[INTRO]Two facts.[/INTRO]\n[CONCLUSION]That is all.[/CONCLUSION]";
  });
  EXPECT_EQ(h.gen.cp_link(make_pair(), two_sentences()).text,
            "Two facts. The sky is blue. Water boils at 100 degrees at sea level. That is all.");
}

TEST(CpLink, LongTransitionTruncated) {
  Harness h([](const std::string&) {
    return "[TRANSITION_1_2]one two three four five six seven eight nine ten eleven twelve "
           "thirteen fourteen fifteen sixteen seventeen[/TRANSITION_1_2]";
  });
  const LinkResult r = h.gen.cp_link(make_pair(), two_sentences());
  EXPECT_EQ(r.truncated_transitions, 1u);
  EXPECT_EQ(r.text.find("sixteen"), std::string::npos);
  EXPECT_NE(r.text.find("fifteen"), std::string::npos);
}

TEST(CpLinkProperty, RemovingLinkTextLeavesSentences) {
  Harness h([](const std::string&) {
    return "[INTRO]In short,[/INTRO][TRANSITION_1_2]Also[/TRANSITION_1_2]"
           "[TRANSITION_2_3]Finally[/TRANSITION_2_3][CONCLUSION]Done.[/CONCLUSION]";
  });
  auto sentences = two_sentences();
  sentences.push_back({"SENT_3", "Ice melts at 0 degrees.", true});
  std::string text = h.gen.cp_link(make_pair(), sentences).text;
  for (const std::string piece : {"In short, ", "Also ", "Finally ", " Done."}) {
    text.erase(text.find(piece), piece.size());
  }
  EXPECT_EQ(text, "The sky is blue. Water boils at 100 degrees at sea level. Ice melts at 0 degrees.");
}

std::string long_context() {
  std::string ctx;
  for (int i = 0; i < 8; ++i) {
    ctx += "Sentence number " + std::to_string(i) + " states a plain fact about the lake. ";
  }
  return trim(ctx);
}

TEST(CpRefine, VerbatimFirstDraftExitsImmediately) {
  const std::string ctx = long_context();
  Harness h([&](const std::string& prompt) {
    return between(prompt, "Context\n\n", "\n\nCopying Requirements");
  });
  const RefineResult r = h.gen.cp_refine(make_pair(ctx));
  EXPECT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.reviewer_calls, 0u);
  EXPECT_FALSE(r.below_threshold);
  EXPECT_GE(*r.history[0].score, 0.8);
  EXPECT_EQ(r.answer, ctx);
}

TEST(CpRefine, NoCopyRunsTMaxRounds) {
  Harness h([&](const std::string& prompt) -> std::string {
    if (prompt.find("Answer Awaiting Review") != std::string::npos) return "Copy more.";
    return "unrelated words entirely";
  });
  const RefineResult r = h.gen.cp_refine(make_pair());
  EXPECT_EQ(r.reviewer_calls, 3u);
  EXPECT_EQ(r.history.size(), 4u);
  EXPECT_TRUE(r.below_threshold);
  EXPECT_EQ(*r.history.back().score, 0.0);
  EXPECT_EQ(r.answer, "unrelated words entirely");
}

TEST(CpRefine, TMaxOneMeansOneReviewerCall) {
  GenerationSettings s;
  s.t_max = 1;
  std::atomic<int> reviewer{0};
  Harness h(
      [&](const std::string& prompt) -> std::string {
        if (prompt.find("Answer Awaiting Review") != std::string::npos) ++reviewer;
        return "nothing relevant";
      },
      s);
  h.gen.cp_refine(make_pair());
  EXPECT_EQ(reviewer.load(), 1);
}

TEST(CpRefine, ReviewerSeesScoreAndFeedbackPassedVerbatim) {
  const std::string ctx = long_context();
  std::string revise_prompt;
  Harness h([&](const std::string& prompt) -> std::string {
    if (prompt.find("Answer Awaiting Review") != std::string::npos) {
      EXPECT_NE(prompt.find("(Current: 0.000)"), std::string::npos);
      return "Use sentence zero verbatim.";
    }
    if (prompt.find("Reviewer's Suggestions") != std::string::npos) {
      revise_prompt = prompt;
      return between(prompt, "Context\n\n", "\n\nQuery");
    }
    return "no idea";
  });
  const RefineResult r = h.gen.cp_refine(make_pair(ctx));
  EXPECT_NE(revise_prompt.find("Use sentence zero verbatim."), std::string::npos);
  EXPECT_NE(revise_prompt.find("Old Answer\n\nno idea"), std::string::npos);
  EXPECT_EQ(r.reviewer_calls, 1u);
  EXPECT_EQ(r.answer, ctx);
  EXPECT_EQ(*r.history[1].feedback, "Use sentence zero verbatim.");
}

TEST(CpRefine, EmptyRevisionKeepsPreviousDraft) {
  Harness h([&](const std::string& prompt) -> std::string {
    if (prompt.find("Answer Awaiting Review") != std::string::npos) return "more";
    if (prompt.find("Reviewer's Suggestions") != std::string::npos) return "   ";
    return "first draft";
  });
  const RefineResult r = h.gen.cp_refine(make_pair());
  EXPECT_EQ(r.answer, "first draft");
  EXPECT_TRUE(r.history[1].writer_failed);
}

TEST(GenerateCandidate, BasePromptIsTheQuery) {
  std::string seen;
  Harness h([&](const std::string& prompt) {
    seen = prompt;
    return "Blue.";
  });
  const Candidate c = h.gen.generate_candidate(make_pair(), CandidateMethod::kBase);
  EXPECT_EQ(seen, "What colour is the sky?");
  EXPECT_EQ(c.candidate_id, "q1/base");
  EXPECT_EQ(c.status, CandidateStatus::kOk);
}

TEST(GenerateCandidate, AttributedPromptNamesTheContext) {
  std::string seen;
  Harness h([&](const std::string& prompt) {
    seen = prompt;
    return "The sky is blue.";
  });
  h.gen.generate_candidate(make_pair(), CandidateMethod::kAttributed);
  EXPECT_NE(seen.find("strictly based on the following context"), std::string::npos);
  EXPECT_NE(seen.find(kContext), std::string::npos);
}

TEST(GenerateCandidate, CitationMarkersIgnoredByMetrics) {
  Harness h([](const std::string&) { return "The sky is blue [1]."; });
  const Candidate c = h.gen.generate_candidate(make_pair(), CandidateMethod::kCitations);
  EXPECT_DOUBLE_EQ(c.metrics.coverage, 1.0);
}

TEST(GenerateCandidate, CpOrderIsOrderedVerifiedSentences) {
  Harness h([](const std::string& prompt) -> std::string {
    if (prompt.find("EXTRACTED: ") != std::string::npos) {
      return "EXTRACTED: The sky is blue.\nEXTRACTED: Ice melts at 0 degrees.\nEXTRACTED: Made up.";
    }
    return "ORDER: SENT_2,SENT_1";
  });
  const Candidate c = h.gen.generate_candidate(make_pair(), CandidateMethod::kCPOrder);
  EXPECT_EQ(c.text, "Ice melts at 0 degrees. The sky is blue.");
  EXPECT_DOUBLE_EQ(c.metrics.coverage, 1.0);
  EXPECT_EQ(c.flags, (std::vector<std::string>{"dropped_sentences=1"}));
  for (const auto& s : split_sentences(c.text)) EXPECT_TRUE(occurs_verbatim(s, kContext));
}

TEST(GenerateCandidate, FailuresBecomeStatus) {
  Harness h([](const std::string&) { return ""; });
  for (auto m : kAllMethods) {
    const Candidate c = h.gen.generate_candidate(make_pair(), m);
    EXPECT_EQ(c.status, CandidateStatus::kGenFailed) << to_string(m);
    EXPECT_FALSE(c.failure.empty());
  }
}

TEST(GenerateCandidate, ExhaustedRetriesBecomeStatus) {
  auto backend = std::make_shared<MockBackend>([](const ChatRequest&) -> ChatResponse {
    throw TransientError(ErrorKind::kTransport, "down", "", 503);
  });
  llm::Client client(backend, fast_options());
  TemplateSet templates;
  PromptGenerator gen(client, templates);
  EXPECT_EQ(gen.generate_candidate(make_pair(), CandidateMethod::kBase).status,
            CandidateStatus::kGenFailed);
}

TEST(Helpers, NumberedBlocks) {
  EXPECT_EQ(numbered_sentences(two_sentences()),
            "SENT_1: The sky is blue.\nSENT_2: Water boils at 100 degrees at sea level.");
  EXPECT_EQ(numbered_passages("A b. C d."), "[1] A b.\n[2] C d.");
}

}  // namespace
}  // namespace copypaste
