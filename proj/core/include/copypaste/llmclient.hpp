#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace copypaste::llm {

struct Message {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

struct ChatRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
  bool want_logprobs = false;
  int top_logprobs = 0;  // K, 0..20

  void validate() const;
  /// Convenience for a single user turn.
  static ChatRequest user(std::string model_id, std::string prompt, double temperature = 0.0);
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;

  friend bool operator==(const TokenLogprob&, const TokenLogprob&) = default;
};

enum class FinishReason { kStop, kLength, kContentFilter, kOther };

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
  int total_tokens = 0;

  friend bool operator==(const Usage&, const Usage&) = default;
};

struct ChatResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::kStop;
  /// One top-K list per generated token, each sorted by descending logprob.
  std::optional<std::vector<std::vector<TokenLogprob>>> token_logprobs;
  Usage usage;

  friend bool operator==(const ChatResponse&, const ChatResponse&) = default;
};

struct EmbeddingRequest {
  std::string model_id;
  std::string text;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;

  void validate() const;
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

nlohmann::json to_json(const ChatRequest& req);
nlohmann::json to_json(const ChatResponse& resp);
ChatResponse chat_response_from_json(const nlohmann::json& j);

/// Wire-level chat and embedding transport. Implementations throw
/// TransientError for failures that may succeed on retry.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse chat(const ChatRequest& req) = 0;
  virtual EmbeddingVector embed(const EmbeddingRequest& req) = 0;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_delay{250};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{8000};

  /// Delay slept after the given failed attempt (1-based).
  std::chrono::milliseconds delay_after(int attempt) const;
};

struct ClientOptions {
  std::string chat_model = "default";
  std::string embedding_model = "default";
  RetryPolicy retry;
  std::size_t max_in_flight = 4;
  /// Persist temperature-0 responses here; in-memory only when unset.
  std::optional<std::filesystem::path> cache_dir;
  /// Replaces std::this_thread::sleep_for; tests record delays through it.
  std::function<void(std::chrono::milliseconds)> sleeper;
};

struct ClientStats {
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
};

/// Thread-safe front end over a Backend: bounded concurrency, bounded
/// retry with exponential backoff, and a content-addressed cache for
/// deterministic (temperature 0) requests and embeddings.
class Client {
 public:
  explicit Client(std::shared_ptr<Backend> backend, ClientOptions options = {});

  ChatResponse chat(const ChatRequest& req);
  /// Single user turn against the configured chat model.
  ChatResponse ask(std::string prompt, double temperature = 0.0);
  EmbeddingVector embed(std::string_view text);
  EmbeddingVector embed(const EmbeddingRequest& req);

  const ClientOptions& options() const { return options_; }
  ClientStats stats() const;

  /// Hex digest identifying a request in the cache.
  static std::string cache_key(const ChatRequest& req);

 private:
  template <typename Fn>
  auto with_retry(Fn&& fn) -> decltype(fn());

  std::optional<std::string> cache_lookup(const std::string& key);
  void cache_store(const std::string& key, const std::string& canonical_request,
                   const std::string& blob);

  class Gate {
   public:
    explicit Gate(std::size_t limit) : limit_(limit == 0 ? 1 : limit) {}
    void acquire();
    void release();

   private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t limit_;
    std::size_t in_use_ = 0;
  };

  std::shared_ptr<Backend> backend_;
  ClientOptions options_;
  Gate gate_;
  mutable std::mutex cache_mu_;
  std::map<std::string, std::string> memory_cache_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> retries_{0};
};

}  // namespace copypaste::llm
