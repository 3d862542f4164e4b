#pragma once

#include <memory>
#include <string>
#include <vector>

#include "copypaste/llmclient.hpp"
#include "copypaste/mock_backend.hpp"
#include "copypaste/text_util.hpp"

namespace copypaste::testing {

/// Client over a mock backend with retries that never sleep.
inline llm::ClientOptions fast_options() {
  llm::ClientOptions o;
  o.chat_model = "mock";
  o.embedding_model = "mock-embed";
  o.sleeper = [](std::chrono::milliseconds) {};
  return o;
}

inline std::string between(const std::string& s, const std::string& after,
                           const std::string& before) {
  const auto b = s.find(after);
  if (b == std::string::npos) return {};
  const auto start = b + after.size();
  const auto e = s.find(before, start);
  return s.substr(start, e == std::string::npos ? std::string::npos : e - start);
}

/// Scripted model for whole-pipeline tests. Extraction returns the first two
/// context sentences, the writer copies the whole context, and the judge
/// prefers the longer response, so CP-Refine wins every match and all six
/// methods produce distinct texts.
inline std::string pipeline_reply(const std::string& prompt) {
  if (prompt.find("Response A: ") != std::string::npos) {
    const auto a = between(prompt, "Response A: ", "\n\nResponse B:").size();
    const auto b = between(prompt, "Response B: ", "\n\nPlease note").size();
    if (a == b) return R"({"verdict": "TIE"})";
    return a > b ? R"({"verdict": "A"})" : R"({"verdict": "B"})";
  }
  if (prompt.find("EXTRACTED: ") != std::string::npos) {
    const auto sentences = split_sentences(between(prompt, "Context\n\n", "\n\nQuery"));
    std::string out;
    for (std::size_t i = 0; i < sentences.size() && i < 2; ++i) out += "EXTRACTED: " + sentences[i] + "\n";
    return out;
  }
  if (prompt.find("ORDER:") != std::string::npos) return "ORDER: SENT_1,SENT_2";
  if (prompt.find("[TRANSITION_") != std::string::npos) return "[TRANSITION_1_2]Also,[/TRANSITION_1_2]";
  if (prompt.find("Answer Awaiting Review") != std::string::npos) return "Copy more.";
  if (prompt.find("Copying Requirements") != std::string::npos) {
    return between(prompt, "Context\n\n", "\n\n");
  }
  if (prompt.find("numbered passages") != std::string::npos) return "The sky is blue [1].";
  if (prompt.find("strictly based on the following context") != std::string::npos) {
    return "The sky is blue.";
  }
  return "Blue, probably.";
}

inline std::shared_ptr<llm::MockBackend> pipeline_backend() {
  return std::make_shared<llm::MockBackend>([](const llm::ChatRequest& req) {
    llm::ChatResponse r;
    r.text = pipeline_reply(llm::prompt_text(req));
    return r;
  });
}

}  // namespace copypaste::testing
