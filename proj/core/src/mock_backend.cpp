#include "copypaste/mock_backend.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "copypaste/error.hpp"
#include "copypaste/text_util.hpp"
#include "copypaste/textseg.hpp"

namespace copypaste::llm {

EmbeddingVector hashed_embedding(std::string_view text, std::size_t dim) {
  EmbeddingVector vec;
  vec.model_id = "hashed-bow-" + std::to_string(dim);
  vec.values.assign(dim, 0.0);
  const TokenSeq seq = tokenize(text);
  for (const auto& surface : seq.content()) {
    vec.values[fnv1a64(surface) % dim] += 1.0;
  }
  // Fixed bias component keeps the vector non-zero for empty text.
  vec.values[0] += 1e-3;
  return vec;
}

MockBackend::MockBackend()
    : MockBackend([](const ChatRequest&) { return ChatResponse{}; }) {}

MockBackend::MockBackend(ChatHandler chat, EmbedHandler embed)
    : chat_(std::move(chat)), embed_(std::move(embed)) {
  if (!embed_) {
    embed_ = [](const EmbeddingRequest& req) { return hashed_embedding(req.text); };
  }
}

std::shared_ptr<MockBackend> MockBackend::replying(std::string text) {
  return std::make_shared<MockBackend>([text = std::move(text)](const ChatRequest&) {
    ChatResponse r;
    r.text = text;
    return r;
  });
}

void MockBackend::set_chat(ChatHandler handler) {
  std::lock_guard lock(mu_);
  chat_ = std::move(handler);
}

void MockBackend::set_embed(EmbedHandler handler) {
  std::lock_guard lock(mu_);
  embed_ = std::move(handler);
}

ChatResponse MockBackend::chat(const ChatRequest& req) {
  ++chat_calls_;
  ChatHandler handler;
  {
    std::lock_guard lock(mu_);
    handler = chat_;
  }
  return handler(req);
}

EmbeddingVector MockBackend::embed(const EmbeddingRequest& req) {
  ++embed_calls_;
  EmbedHandler handler;
  {
    std::lock_guard lock(mu_);
    handler = embed_;
  }
  return handler(req);
}

std::string prompt_text(const ChatRequest& req) {
  std::string out;
  for (const auto& m : req.messages) {
    if (!out.empty()) out.push_back('\n');
    out += m.content;
  }
  return out;
}

namespace {

struct Rule {
  std::vector<std::string> when;
  std::string after;
  std::string before;
  std::string each_sentence;
  std::string reply;
};

std::string capture_between(const std::string& prompt, const Rule& rule) {
  std::size_t begin = 0;
  if (!rule.after.empty()) {
    const auto pos = prompt.find(rule.after);
    if (pos == std::string::npos) return {};
    begin = pos + rule.after.size();
  }
  std::size_t end = prompt.size();
  if (!rule.before.empty()) {
    const auto pos = prompt.find(rule.before, begin);
    if (pos != std::string::npos) end = pos;
  }
  return prompt.substr(begin, end - begin);
}

}  // namespace

std::shared_ptr<MockBackend> make_rule_backend(const nlohmann::json& script) {
  std::vector<Rule> rules;
  try {
    for (const auto& r : script.value("chat", nlohmann::json::array())) {
      Rule rule;
      rule.when = r.value("when", std::vector<std::string>{});
      if (r.contains("capture")) {
        rule.after = r["capture"].value("after", "");
        rule.before = r["capture"].value("before", "");
      }
      rule.each_sentence = r.value("each_sentence", "");
      rule.reply = r.value("reply", "");
      rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("malformed mock script: ") + e.what());
  }
  const std::string fallback = script.value("default_reply", "");
  const std::size_t dim = script.contains("embedding")
                              ? script["embedding"].value("dim", std::size_t{64})
                              : std::size_t{64};

  auto chat = [rules = std::move(rules), fallback](const ChatRequest& req) {
    const std::string prompt = prompt_text(req);
    ChatResponse resp;
    resp.text = fallback;
    for (const auto& rule : rules) {
      bool match = true;
      for (const auto& needle : rule.when) {
        if (prompt.find(needle) == std::string::npos) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      const std::string captured = trim(capture_between(prompt, rule));
      if (!rule.each_sentence.empty()) {
        std::string text;
        for (const auto& sentence : split_sentences(captured)) {
          if (!text.empty()) text.push_back('\n');
          text += render_template(rule.each_sentence, {{"sentence", sentence}});
        }
        resp.text = text;
      } else {
        resp.text = render_template(rule.reply, {{"capture", captured}});
      }
      break;
    }
    return resp;
  };
  auto embed = [dim](const EmbeddingRequest& req) { return hashed_embedding(req.text, dim); };
  return std::make_shared<MockBackend>(std::move(chat), std::move(embed));
}

}  // namespace copypaste::llm
