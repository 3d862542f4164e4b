#include "copypaste/llmclient.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "copypaste/error.hpp"
#include "copypaste/text_util.hpp"

namespace copypaste::llm {

using nlohmann::json;

void ChatRequest::validate() const {
  if (messages.empty()) throw Error(ErrorKind::kInvalidArgument, "chat request has no messages");
  if (temperature < 0.0) throw Error(ErrorKind::kInvalidArgument, "temperature must be >= 0");
  if (top_logprobs < 0 || top_logprobs > 20) {
    throw Error(ErrorKind::kInvalidArgument, "top_logprobs must lie in [0, 20]");
  }
  if (want_logprobs && top_logprobs < 1) {
    throw Error(ErrorKind::kInvalidArgument, "want_logprobs requires top_logprobs >= 1");
  }
}

ChatRequest ChatRequest::user(std::string model_id, std::string prompt, double temperature) {
  ChatRequest req;
  req.model_id = std::move(model_id);
  req.messages.push_back({"user", std::move(prompt)});
  req.temperature = temperature;
  return req;
}

void EmbeddingVector::validate() const {
  if (values.empty()) throw Error(ErrorKind::kProtocol, "embedding vector is empty");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kProtocol, "embedding has a non-finite entry");
  }
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.values.size() != b.values.size()) {
    throw Error(ErrorKind::kInvalidArgument, "cosine of embeddings with different dimensions");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

std::string_view finish_name(FinishReason r) {
  switch (r) {
    case FinishReason::kStop:
      return "stop";
    case FinishReason::kLength:
      return "length";
    case FinishReason::kContentFilter:
      return "content_filter";
    case FinishReason::kOther:
      return "other";
  }
  return "other";
}

FinishReason finish_from(std::string_view s) {
  if (s == "stop") return FinishReason::kStop;
  if (s == "length") return FinishReason::kLength;
  if (s == "content_filter") return FinishReason::kContentFilter;
  return FinishReason::kOther;
}

}  // namespace

json to_json(const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", req.model_id},
          {"messages", std::move(messages)},
          {"temperature", req.temperature},
          {"max_tokens", req.max_tokens},
          {"logprobs", req.want_logprobs},
          {"top_logprobs", req.top_logprobs}};
}

json to_json(const ChatResponse& resp) {
  json j = {{"text", resp.text},
            {"finish_reason", finish_name(resp.finish_reason)},
            {"usage",
             {{"prompt_tokens", resp.usage.prompt_tokens},
              {"completion_tokens", resp.usage.completion_tokens},
              {"total_tokens", resp.usage.total_tokens}}}};
  if (resp.token_logprobs) {
    json steps = json::array();
    for (const auto& step : *resp.token_logprobs) {
      json entries = json::array();
      for (const auto& e : step) entries.push_back({e.token, e.logprob});
      steps.push_back(std::move(entries));
    }
    j["token_logprobs"] = std::move(steps);
  }
  return j;
}

ChatResponse chat_response_from_json(const json& j) {
  ChatResponse resp;
  resp.text = j.at("text").get<std::string>();
  resp.finish_reason = finish_from(j.value("finish_reason", "stop"));
  if (j.contains("usage")) {
    const auto& u = j.at("usage");
    resp.usage = {u.value("prompt_tokens", 0), u.value("completion_tokens", 0),
                  u.value("total_tokens", 0)};
  }
  if (j.contains("token_logprobs")) {
    std::vector<std::vector<TokenLogprob>> steps;
    for (const auto& step : j.at("token_logprobs")) {
      std::vector<TokenLogprob> entries;
      for (const auto& e : step) entries.push_back({e.at(0).get<std::string>(), e.at(1).get<double>()});
      steps.push_back(std::move(entries));
    }
    resp.token_logprobs = std::move(steps);
  }
  return resp;
}

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  double delay = static_cast<double>(initial_delay.count());
  for (int i = 1; i < attempt; ++i) delay *= multiplier;
  delay = std::min(delay, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<long long>(delay));
}

void Client::Gate::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_use_ < limit_; });
  ++in_use_;
}

void Client::Gate::release() {
  {
    std::lock_guard lock(mu_);
    --in_use_;
  }
  cv_.notify_one();
}

Client::Client(std::shared_ptr<Backend> backend, ClientOptions options)
    : backend_(std::move(backend)), options_(std::move(options)), gate_(options_.max_in_flight) {
  if (!backend_) throw Error(ErrorKind::kConfig, "client constructed without a backend");
  if (options_.retry.max_attempts < 1) {
    throw Error(ErrorKind::kConfig, "retry policy needs at least one attempt");
  }
  if (options_.cache_dir) std::filesystem::create_directories(*options_.cache_dir);
}

template <typename Fn>
auto Client::with_retry(Fn&& fn) -> decltype(fn()) {
  const int limit = options_.retry.max_attempts;
  for (int attempt = 1;; ++attempt) {
    gate_.acquire();
    try {
      ++backend_calls_;
      auto result = fn();
      gate_.release();
      return result;
    } catch (const TransientError& e) {
      gate_.release();
      if (attempt >= limit) {
        throw BackendError(ErrorKind::kTransport,
                           "backend failed after " + std::to_string(attempt) +
                               " attempts: " + e.what(),
                           e.payload(), e.status());
      }
      ++retries_;
      const auto delay = options_.retry.delay_after(attempt);
      if (options_.sleeper) {
        options_.sleeper(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
    } catch (...) {
      gate_.release();
      throw;
    }
  }
}

std::string Client::cache_key(const ChatRequest& req) {
  return sha256_hex(to_json(req).dump());
}

std::optional<std::string> Client::cache_lookup(const std::string& key) {
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = memory_cache_.find(key); it != memory_cache_.end()) return it->second;
  }
  if (!options_.cache_dir) return std::nullopt;
  const auto path = *options_.cache_dir / key.substr(0, 2) / (key + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    auto entry = json::parse(ss.str());
    std::string blob = entry.at("response").dump();
    std::lock_guard lock(cache_mu_);
    memory_cache_.emplace(key, blob);
    return blob;
  } catch (const json::exception&) {
    return std::nullopt;  // corrupt entry: treat as a miss and overwrite later
  }
}

void Client::cache_store(const std::string& key, const std::string& canonical_request,
                         const std::string& blob) {
  {
    std::lock_guard lock(cache_mu_);
    memory_cache_[key] = blob;
  }
  if (!options_.cache_dir) return;
  const auto dir = *options_.cache_dir / key.substr(0, 2);
  std::filesystem::create_directories(dir);
  const auto final_path = dir / (key + ".json");
  const auto tmp_path = dir / (key + ".json.tmp" +
                               std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
  {
    std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write cache entry " + tmp_path.string());
    json entry = {{"request", json::parse(canonical_request)}, {"response", json::parse(blob)}};
    out << entry.dump();
  }
  std::filesystem::rename(tmp_path, final_path);
}

ChatResponse Client::chat(const ChatRequest& req) {
  req.validate();
  const bool cacheable = req.temperature == 0.0;
  std::string canonical;
  std::string key;
  if (cacheable) {
    canonical = to_json(req).dump();
    key = sha256_hex(canonical);
    if (auto hit = cache_lookup(key)) {
      ++cache_hits_;
      return chat_response_from_json(json::parse(*hit));
    }
  }
  ChatResponse resp = with_retry([&] { return backend_->chat(req); });
  if (req.want_logprobs && resp.token_logprobs) {
    for (const auto& step : *resp.token_logprobs) {
      if (step.size() > static_cast<std::size_t>(req.top_logprobs) ||
          !std::is_sorted(step.begin(), step.end(),
                          [](const auto& a, const auto& b) { return a.logprob > b.logprob; })) {
        throw BackendError(ErrorKind::kProtocol, "top logprobs exceed K or are not descending",
                           to_json(resp).dump());
      }
    }
  }
  if (cacheable) cache_store(key, canonical, to_json(resp).dump());
  return resp;
}

ChatResponse Client::ask(std::string prompt, double temperature) {
  return chat(ChatRequest::user(options_.chat_model, std::move(prompt), temperature));
}

EmbeddingVector Client::embed(std::string_view text) {
  return embed(EmbeddingRequest{options_.embedding_model, std::string(text)});
}

EmbeddingVector Client::embed(const EmbeddingRequest& req) {
  const std::string canonical =
      json{{"kind", "embedding"}, {"model", req.model_id}, {"input", req.text}}.dump();
  const std::string key = sha256_hex(canonical);
  if (auto hit = cache_lookup(key)) {
    ++cache_hits_;
    const auto j = json::parse(*hit);
    return {j.at("values").get<std::vector<double>>(), j.at("model").get<std::string>()};
  }
  EmbeddingVector vec = with_retry([&] { return backend_->embed(req); });
  vec.validate();
  cache_store(key, canonical, json{{"values", vec.values}, {"model", vec.model_id}}.dump());
  return vec;
}

ClientStats Client::stats() const {
  return {backend_calls_.load(), cache_hits_.load(), retries_.load()};
}

}  // namespace copypaste::llm
