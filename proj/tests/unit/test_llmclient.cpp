#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "copypaste/error.hpp"
#include "copypaste/http_backend.hpp"
#include "copypaste/llmclient.hpp"
#include "copypaste/mock_backend.hpp"
#include "copypaste/parallel.hpp"
#include "support.hpp"

namespace copypaste::llm {
namespace {

using copypaste::testing::fast_options;

TEST(Client, ScriptedReply) {
  auto backend = MockBackend::replying("PARIS");
  Client client(backend, fast_options());
  EXPECT_EQ(client.ask("Capital of France?").text, "PARIS");
}

TEST(Client, TemperatureZeroIsCached) {
  auto backend = MockBackend::replying("PARIS");
  Client client(backend, fast_options());
  const auto first = client.ask("q");
  const auto second = client.ask("q");
  EXPECT_EQ(first, second);
  EXPECT_EQ(backend->chat_calls(), 1u);
  EXPECT_EQ(client.stats().cache_hits, 1u);
}

TEST(Client, SampledRequestsBypassCache) {
  auto backend = MockBackend::replying("x");
  Client client(backend, fast_options());
  client.ask("q", 0.7);
  client.ask("q", 0.7);
  EXPECT_EQ(backend->chat_calls(), 2u);
}

TEST(Client, DiskCacheSurvivesNewClient) {
  const auto dir = std::filesystem::temp_directory_path() / "copypaste_cache_test";
  std::filesystem::remove_all(dir);
  auto opts = fast_options();
  opts.cache_dir = dir;
  ChatResponse original;
  {
    auto backend = std::make_shared<MockBackend>([](const ChatRequest&) {
      ChatResponse r;
      r.text = "cached 0.1";
      r.usage = {3, 2, 5};
      r.token_logprobs = std::vector<std::vector<TokenLogprob>>{{{"a", -0.1}, {"b", -2.3}}};
      return r;
    });
    Client client(backend, opts);
    auto req = ChatRequest::user("m", "hello");
    req.want_logprobs = true;
    req.top_logprobs = 2;
    original = client.chat(req);
  }
  auto silent = std::make_shared<MockBackend>();
  Client client(silent, opts);
  auto req = ChatRequest::user("m", "hello");
  req.want_logprobs = true;
  req.top_logprobs = 2;
  EXPECT_EQ(client.chat(req), original);
  EXPECT_EQ(silent->chat_calls(), 0u);
  std::filesystem::remove_all(dir);
}

TEST(Client, LogprobsHaveLengthKDescending) {
  auto backend = std::make_shared<MockBackend>([](const ChatRequest& req) {
    ChatResponse r;
    r.text = "ab";
    std::vector<TokenLogprob> dist = {{"a", -0.2}, {"b", -1.0}, {"c", -3.0}};
    dist.resize(static_cast<std::size_t>(req.top_logprobs));
    r.token_logprobs = std::vector<std::vector<TokenLogprob>>{dist, dist};
    return r;
  });
  Client client(backend, fast_options());
  auto req = ChatRequest::user("m", "p");
  req.want_logprobs = true;
  req.top_logprobs = 3;
  const auto resp = client.chat(req);
  ASSERT_TRUE(resp.token_logprobs);
  for (const auto& step : *resp.token_logprobs) {
    ASSERT_EQ(step.size(), 3u);
    EXPECT_GT(step[0].logprob, step[1].logprob);
    EXPECT_GT(step[1].logprob, step[2].logprob);
  }
}

TEST(Client, RejectsUnsortedLogprobs) {
  auto backend = std::make_shared<MockBackend>([](const ChatRequest&) {
    ChatResponse r;
    r.token_logprobs = std::vector<std::vector<TokenLogprob>>{{{"a", -2.0}, {"b", -1.0}}};
    return r;
  });
  Client client(backend, fast_options());
  auto req = ChatRequest::user("m", "p");
  req.want_logprobs = true;
  req.top_logprobs = 2;
  try {
    client.chat(req);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kProtocol);
    EXPECT_FALSE(e.payload().empty());
  }
}

TEST(Client, RetriesTransientFailuresWithGrowingDelays) {
  std::atomic<int> calls{0};
  auto backend = std::make_shared<MockBackend>([&](const ChatRequest&) {
    if (++calls < 3) throw TransientError(ErrorKind::kTransport, "503", "busy", 503);
    ChatResponse r;
    r.text = "ok";
    return r;
  });
  std::vector<std::chrono::milliseconds> delays;
  auto opts = fast_options();
  opts.sleeper = [&](std::chrono::milliseconds d) { delays.push_back(d); };
  Client client(backend, opts);
  EXPECT_EQ(client.ask("q").text, "ok");
  ASSERT_EQ(delays.size(), 2u);
  EXPECT_LE(delays[0], delays[1]);
  EXPECT_EQ(client.stats().retries, 2u);
}

TEST(Client, ExhaustedRetriesBecomeTransportError) {
  std::atomic<int> calls{0};
  auto backend = std::make_shared<MockBackend>([&](const ChatRequest&) -> ChatResponse {
    ++calls;
    throw TransientError(ErrorKind::kTransport, "timeout", "raw-body", 0);
  });
  std::vector<std::chrono::milliseconds> delays;
  auto opts = fast_options();
  opts.retry.max_attempts = 5;
  opts.retry.max_delay = std::chrono::milliseconds(600);
  opts.sleeper = [&](std::chrono::milliseconds d) { delays.push_back(d); };
  Client client(backend, opts);
  try {
    client.ask("q");
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTransport);
    EXPECT_EQ(e.payload(), "raw-body");
  }
  EXPECT_EQ(calls.load(), 5);
  for (std::size_t i = 1; i < delays.size(); ++i) EXPECT_LE(delays[i - 1], delays[i]);
  EXPECT_EQ(delays.back(), std::chrono::milliseconds(600));
}

TEST(Client, InFlightLimitIsRespected) {
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  auto backend = std::make_shared<MockBackend>([&](const ChatRequest&) {
    const int now = ++active;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    return ChatResponse{};
  });
  auto opts = fast_options();
  opts.max_in_flight = 2;
  Client client(backend, opts);
  copypaste::parallel_for(24, 8, [&](std::size_t i) { client.ask("q" + std::to_string(i)); });
  EXPECT_LE(peak.load(), 2);
  EXPECT_EQ(backend->chat_calls(), 24u);
}

TEST(Client, EmbeddingsAndCosine) {
  auto backend = std::make_shared<MockBackend>();
  backend->set_embed([](const EmbeddingRequest& req) {
    EmbeddingVector v;
    v.model_id = req.model_id;
    v.values = req.text == "x" ? std::vector<double>{1, 0, 0} : std::vector<double>{0, 1, 0};
    return v;
  });
  Client client(backend, fast_options());
  const auto e1 = client.embed("x");
  EXPECT_EQ(e1.values, (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(cosine(e1, client.embed("y")), 0.0);
  EXPECT_DOUBLE_EQ(cosine(e1, e1), 1.0);
  client.embed("x");
  EXPECT_EQ(backend->embed_calls(), 2u);
}

TEST(ChatRequest, Validation) {
  ChatRequest req;
  EXPECT_THROW(req.validate(), Error);
  req = ChatRequest::user("m", "p");
  req.top_logprobs = 21;
  EXPECT_THROW(req.validate(), Error);
  req.top_logprobs = 0;
  req.want_logprobs = true;
  EXPECT_THROW(req.validate(), Error);
}

TEST(HttpBackend, ParsesChatPayload) {
  const std::string payload = R"({"choices":[{"message":{"role":"assistant","content":"hi"},
    "finish_reason":"length","logprobs":{"content":[{"token":"hi","logprob":-0.1,
    "top_logprobs":[{"token":"hi","logprob":-0.1},{"token":"hey","logprob":-2.5}]}]}}],
    "usage":{"prompt_tokens":4,"completion_tokens":1,"total_tokens":5}})";
  const ChatResponse r = HttpBackend::parse_chat_payload(payload);
  EXPECT_EQ(r.text, "hi");
  EXPECT_EQ(r.finish_reason, FinishReason::kLength);
  ASSERT_TRUE(r.token_logprobs);
  ASSERT_EQ(r.token_logprobs->at(0).size(), 2u);
  EXPECT_EQ(r.token_logprobs->at(0)[1].token, "hey");
  EXPECT_EQ(r.usage.total_tokens, 5);
}

TEST(HttpBackend, MalformedPayloadIsProtocolError) {
  for (const std::string bad : {"not json", "{}", R"({"choices":[]})", R"({"data":[{}]})"}) {
    try {
      HttpBackend::parse_chat_payload(bad);
      FAIL() << bad;
    } catch (const BackendError& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kProtocol);
      EXPECT_EQ(e.payload(), bad);
    }
  }
  EXPECT_THROW(HttpBackend::parse_embedding_payload("{}", "m"), BackendError);
  EXPECT_EQ(HttpBackend::parse_embedding_payload(R"({"data":[{"embedding":[0.5,1]}]})", "m").values,
            (std::vector<double>{0.5, 1}));
}

TEST(MockRules, CaptureAndEachSentence) {
  const auto script = nlohmann::json::parse(R"({
    "chat": [
      {"when": ["EXTRACT"], "capture": {"after": "<", "before": ">"},
       "each_sentence": "EXTRACTED: {sentence}"},
      {"when": ["echo"], "capture": {"after": "echo "}, "reply": "[{capture}]"}
    ],
    "default_reply": "dunno"})");
  auto backend = make_rule_backend(script);
  Client client(backend, fast_options());
  EXPECT_EQ(client.ask("EXTRACT <One. Two.>").text, "EXTRACTED: One.\nEXTRACTED: Two.");
  EXPECT_EQ(client.ask("please echo this").text, "[this]");
  EXPECT_EQ(client.ask("other").text, "dunno");
  EXPECT_EQ(client.embed("abc").values.size(), 64u);
}

TEST(HashedEmbedding, SharedVocabularyIsCloser) {
  const auto a = hashed_embedding("the red fox jumps");
  const auto b = hashed_embedding("a red fox sleeps");
  const auto c = hashed_embedding("quantum chromodynamics lecture");
  EXPECT_GT(cosine(a, b), cosine(a, c));
}

}  // namespace
}  // namespace copypaste::llm
