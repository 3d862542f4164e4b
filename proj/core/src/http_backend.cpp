#include "copypaste/http_backend.hpp"

#include <algorithm>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "copypaste/error.hpp"

namespace copypaste {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kConfig, "URL without scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResult http_post_json(const std::string& url, const std::string& body,
                          const std::map<std::string, std::string>& headers,
                          std::chrono::seconds timeout) {
  const ParsedUrl parts = split_url(url);
  httplib::Client cli(parts.origin);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);
  auto res = cli.Post(parts.path, hdrs, body, "application/json");
  if (!res) {
    throw TransientError(ErrorKind::kTransport,
                         "POST " + url + " failed: " + httplib::to_string(res.error()), "");
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransientError(ErrorKind::kTransport,
                         "POST " + url + " returned HTTP " + std::to_string(res->status),
                         res->body, res->status);
  }
  return {res->status, res->body};
}

namespace llm {

using nlohmann::json;

HttpBackendOptions HttpBackendOptions::from_env() {
  HttpBackendOptions opts;
  auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  if (auto v = env("COPYPASTE_API_BASE"); !v.empty()) {
    opts.base_url = v;
  } else if (auto o = env("OPENAI_BASE_URL"); !o.empty()) {
    opts.base_url = o;
  }
  opts.api_key = env("COPYPASTE_API_KEY");
  if (opts.api_key.empty()) opts.api_key = env("OPENAI_API_KEY");
  return opts;
}

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  while (!options_.base_url.empty() && options_.base_url.back() == '/') {
    options_.base_url.pop_back();
  }
  split_url(options_.base_url);
}

std::string HttpBackend::post(const std::string& path, const std::string& body) {
  std::map<std::string, std::string> headers;
  if (!options_.api_key.empty()) headers["Authorization"] = "Bearer " + options_.api_key;
  const HttpResult res = http_post_json(options_.base_url + path, body, headers, options_.timeout);
  if (res.status != 200) {
    throw BackendError(ErrorKind::kTransport,
                       "POST " + path + " returned HTTP " + std::to_string(res.status), res.body,
                       res.status);
  }
  return res.body;
}

ChatResponse HttpBackend::parse_chat_payload(const std::string& payload) {
  try {
    const json j = json::parse(payload);
    const auto& choice = j.at("choices").at(0);
    ChatResponse resp;
    const auto& content = choice.at("message").at("content");
    resp.text = content.is_null() ? std::string() : content.get<std::string>();
    const std::string finish =
        choice.contains("finish_reason") && choice["finish_reason"].is_string()
            ? choice["finish_reason"].get<std::string>()
            : "stop";
    resp.finish_reason = finish == "stop"     ? FinishReason::kStop
                         : finish == "length" ? FinishReason::kLength
                         : finish == "content_filter" ? FinishReason::kContentFilter
                                                      : FinishReason::kOther;
    if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
        choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
      std::vector<std::vector<TokenLogprob>> steps;
      for (const auto& tok : choice["logprobs"]["content"]) {
        std::vector<TokenLogprob> entries;
        for (const auto& alt : tok.value("top_logprobs", json::array())) {
          entries.push_back({alt.at("token").get<std::string>(), alt.at("logprob").get<double>()});
        }
        std::stable_sort(entries.begin(), entries.end(),
                         [](const auto& a, const auto& b) { return a.logprob > b.logprob; });
        steps.push_back(std::move(entries));
      }
      resp.token_logprobs = std::move(steps);
    }
    if (j.contains("usage") && j["usage"].is_object()) {
      const auto& u = j["usage"];
      resp.usage = {u.value("prompt_tokens", 0), u.value("completion_tokens", 0),
                    u.value("total_tokens", 0)};
    }
    return resp;
  } catch (const json::exception& e) {
    throw BackendError(ErrorKind::kProtocol,
                       std::string("malformed chat completion payload: ") + e.what(), payload);
  }
}

EmbeddingVector HttpBackend::parse_embedding_payload(const std::string& payload,
                                                     const std::string& model_id) {
  try {
    const json j = json::parse(payload);
    EmbeddingVector vec;
    vec.model_id = model_id;
    vec.values = j.at("data").at(0).at("embedding").get<std::vector<double>>();
    vec.validate();
    return vec;
  } catch (const json::exception& e) {
    throw BackendError(ErrorKind::kProtocol,
                       std::string("malformed embedding payload: ") + e.what(), payload);
  } catch (const Error& e) {
    throw BackendError(ErrorKind::kProtocol, e.what(), payload);
  }
}

ChatResponse HttpBackend::chat(const ChatRequest& req) {
  json body = to_json(req);
  if (!req.want_logprobs) {
    body.erase("logprobs");
    body.erase("top_logprobs");
  }
  return parse_chat_payload(post("/chat/completions", body.dump()));
}

EmbeddingVector HttpBackend::embed(const EmbeddingRequest& req) {
  const json body = {{"model", req.model_id}, {"input", req.text}};
  return parse_embedding_payload(post("/embeddings", body.dump()), req.model_id);
}

}  // namespace llm
}  // namespace copypaste
