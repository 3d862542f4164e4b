#pragma once

#include <chrono>
#include <map>
#include <string>

#include "copypaste/llmclient.hpp"

namespace copypaste {

struct HttpResult {
  int status = 0;
  std::string body;
};

/// POSTs a JSON body to an absolute http(s) URL. Connection failures, 429
/// and 5xx raise TransientError; other failures are returned to the caller.
HttpResult http_post_json(const std::string& url, const std::string& body,
                          const std::map<std::string, std::string>& headers,
                          std::chrono::seconds timeout);

namespace llm {

struct HttpBackendOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::chrono::seconds timeout{120};

  /// Reads COPYPASTE_API_BASE / COPYPASTE_API_KEY, falling back to
  /// OPENAI_BASE_URL / OPENAI_API_KEY.
  static HttpBackendOptions from_env();
};

/// OpenAI-compatible /chat/completions and /embeddings transport.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);

  ChatResponse chat(const ChatRequest& req) override;
  EmbeddingVector embed(const EmbeddingRequest& req) override;

  /// Wire-shape decoding, exposed for tests.
  static ChatResponse parse_chat_payload(const std::string& payload);
  static EmbeddingVector parse_embedding_payload(const std::string& payload,
                                                 const std::string& model_id);

 private:
  std::string post(const std::string& path, const std::string& body);

  HttpBackendOptions options_;
};

}  // namespace llm
}  // namespace copypaste
