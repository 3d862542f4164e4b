#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "copypaste/llmclient.hpp"

namespace copypaste::llm {

/// Deterministic bag-of-words embedding: each content token is hashed into
/// one of `dim` buckets. Texts sharing vocabulary get positive cosine.
EmbeddingVector hashed_embedding(std::string_view text, std::size_t dim = 64);

/// Offline backend driven by caller-supplied handlers. Counts calls so
/// tests can assert on cache and loop behaviour.
class MockBackend : public Backend {
 public:
  using ChatHandler = std::function<ChatResponse(const ChatRequest&)>;
  using EmbedHandler = std::function<EmbeddingVector(const EmbeddingRequest&)>;

  MockBackend();
  explicit MockBackend(ChatHandler chat, EmbedHandler embed = {});

  /// Backend answering every chat request with the same text.
  static std::shared_ptr<MockBackend> replying(std::string text);

  void set_chat(ChatHandler handler);
  void set_embed(EmbedHandler handler);

  ChatResponse chat(const ChatRequest& req) override;
  EmbeddingVector embed(const EmbeddingRequest& req) override;

  std::size_t chat_calls() const { return chat_calls_.load(); }
  std::size_t embed_calls() const { return embed_calls_.load(); }

 private:
  mutable std::mutex mu_;
  ChatHandler chat_;
  EmbedHandler embed_;
  std::atomic<std::size_t> chat_calls_{0};
  std::atomic<std::size_t> embed_calls_{0};
};

/// Prompt text of a request: all message contents joined by newlines.
std::string prompt_text(const ChatRequest& req);

/// Builds a mock from a JSON rule script (the CLI's `backend = "mock"`).
///
///   {"chat": [{"when": ["Related", "EXTRACTED"],
///              "capture": {"after": "Context\n\n", "before": "\n\nQuery"},
///              "each_sentence": "EXTRACTED: {sentence}",
///              "reply": "..."}],
///    "default_reply": "",
///    "embedding": {"dim": 64}}
///
/// The first rule whose `when` substrings all occur in the prompt fires.
/// `reply` may reference {capture}, the prompt text between the `after` and
/// `before` markers. With `each_sentence`, the captured text is split into
/// sentences and the template is emitted once per sentence, one per line.
std::shared_ptr<MockBackend> make_rule_backend(const nlohmann::json& script);

}  // namespace copypaste::llm
