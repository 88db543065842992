#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fescale/backends.hpp"
#include "fescale/prompting.hpp"

using namespace fescale;
using nlohmann::json;

namespace {

ChatRequest request_for(std::string prompt, int n = 1, double temperature = 0.7) {
  ChatRequest req;
  req.conversation = Conversation::single_prompt(std::move(prompt));
  req.params = SamplingParams{temperature, 0.9, 64, n};
  return req;
}

/// Fails with EndpointUnavailable for the first `failures` calls.
class FlakyBackend final : public ChatBackend {
 public:
  explicit FlakyBackend(int failures, bool batched = true) : failures_(failures), batched_(batched) {}
  std::string name() const override { return "flaky"; }
  bool supports_batched_n() const override { return batched_; }
  ChatResult complete_once(const ChatRequest& request) const override {
    const int call = calls_++;
    if (call < failures_) throw Error(ErrorCode::EndpointUnavailable, "down");
    ChatResult r;
    for (int i = 0; i < request.params.n; ++i) {
      r.texts.push_back("sample " + std::to_string(request.sample_offset + i));
    }
    return r;
  }
  int calls() const { return calls_.load(); }

 private:
  int failures_;
  bool batched_;
  mutable std::atomic<int> calls_{0};
};

class ShortBackend final : public ChatBackend {
 public:
  std::string name() const override { return "short"; }
  ChatResult complete_once(const ChatRequest&) const override { return {{"only one"}, {}}; }
};

RetryPolicy fast_retry(int attempts) {
  RetryPolicy r;
  r.max_attempts = attempts;
  r.base_backoff = std::chrono::milliseconds(1);
  return r;
}

}  // namespace

TEST_CASE("retry recovers from transient failures within the attempt budget") {
  FlakyBackend flaky(2);
  const auto result = complete(flaky, request_for("hi"), fast_retry(3));
  CHECK(result.texts == std::vector<std::string>{"sample 0"});
  CHECK(flaky.calls() == 3);
}

TEST_CASE("retry gives up after max attempts") {
  FlakyBackend flaky(5);
  try {
    complete(flaky, request_for("hi"), fast_retry(3));
    FAIL("expected EndpointUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EndpointUnavailable);
  }
  CHECK(flaky.calls() == 3);
}

TEST_CASE("backoff grows geometrically") {
  RetryPolicy r;
  CHECK(r.backoff_before(1).count() == 0);
  CHECK(r.backoff_before(2).count() == 500);
  CHECK(r.backoff_before(3).count() == 1000);
  CHECK(r.backoff_before(4).count() == 2000);
}

TEST_CASE("non-batching backends receive one call per sample") {
  FlakyBackend single(0, /*batched=*/false);
  const auto result = complete(single, request_for("hi", 4), fast_retry(1));
  CHECK(single.calls() == 4);
  CHECK(result.texts == std::vector<std::string>{"sample 0", "sample 1", "sample 2", "sample 3"});
}

TEST_CASE("short completions are rejected without retry") {
  ShortBackend b;
  try {
    complete(b, request_for("hi", 3), fast_retry(3));
    FAIL("expected MalformedResponse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedResponse);
  }
}

TEST_CASE("greedy requests cannot ask for several samples") {
  MockBackend mock(MockOptions{});
  CHECK_THROWS_AS(complete(mock, request_for("hi", 2, 0.0), fast_retry(1)), Error);
}

TEST_CASE("request fingerprint covers messages and sampling but not n") {
  const auto a = request_fingerprint(request_for("hello", 1));
  CHECK(a.size() == 16);
  CHECK(a == request_fingerprint(request_for("hello", 8)));
  CHECK(a != request_fingerprint(request_for("hello!", 1)));
  CHECK(a != request_fingerprint(request_for("hello", 1, 0.6)));
  auto with_suffix = request_for("hello");
  with_suffix.task_suffix = "x";
  CHECK(a != request_fingerprint(with_suffix));
}

TEST_CASE("mock output is a pure function of request, sample index and seed") {
  MockOptions opts;
  opts.seed = 3;
  MockBackend m1(opts), m2(opts);
  opts.seed = 4;
  MockBackend other(opts);
  const auto req = request_for("Tell me about rivers.", 4);
  const auto a = complete(m1, req, fast_retry(1)).texts;
  CHECK(a == complete(m2, req, fast_retry(1)).texts);
  CHECK(a != complete(other, req, fast_retry(1)).texts);
  // Samples are nested: the first two of an n=4 request equal an n=2 request.
  const auto b = complete(m1, request_for("Tell me about rivers.", 2), fast_retry(1)).texts;
  CHECK(b[0] == a[0]);
  CHECK(b[1] == a[1]);
  // Splitting into single calls yields the same samples as one batched call.
  opts.seed = 3;
  opts.batched_n = false;
  MockBackend unbatched(opts);
  CHECK(complete(unbatched, req, fast_retry(1)).texts == a);
}

TEST_CASE("mock script answers by fingerprint and cycles outputs") {
  const auto req = request_for("scripted", 3);
  auto mock = mock_register({{request_fingerprint(req), {"x", "y"}}}, 0);
  CHECK(complete(mock, req, fast_retry(1)).texts == std::vector<std::string>{"x", "y", "x"});
  CHECK(mock.chat_calls() == 1);
}

TEST_CASE("mock synthesizes feedback in the canonical format") {
  MockBackend mock(MockOptions{});
  ChatRequest req;
  req.conversation = Conversation::single_prompt(
      render_feedback_prompt(Conversation::single_prompt("Q").with_turn(Role::Assistant, "A")));
  req.params = SamplingParams{0.7, 0.9, 512, 32};
  for (const auto& text : complete(mock, req, fast_retry(1)).texts) {
    CHECK(try_parse_helpfulness(text).has_value());
  }
}

TEST_CASE("mock reward modes") {
  MockOptions opts;
  opts.reward = MockReward::Length;
  MockBackend length(opts);
  const auto prompt = Conversation::single_prompt("q");
  CHECK(score(length, prompt, "abcd", fast_retry(1)) == doctest::Approx(4.0));
  MockBackend hashed(MockOptions{});
  const double s = score(hashed, prompt, "abcd", fast_retry(1));
  CHECK(s >= -5.0);
  CHECK(s < 5.0);
  CHECK(s == score(hashed, prompt, "abcd", fast_retry(1)));
  CHECK_THROWS_AS(score(hashed, prompt.with_turn(Role::Assistant, "a"), "x", fast_retry(1)), Error);
  CHECK_THROWS_AS(score(hashed, prompt, "", fast_retry(1)), Error);
}

TEST_CASE("mock options load from JSON") {
  const auto opts = mock_options_from_json(
      R"({"seed": 9, "reward": "length", "judge_verdict": "tie", "batched_n": false,
          "feedback_profile": {"perfectly_rate": 0.0, "keyword_rate": 1.0},
          "script": {"abc": ["one"]}})");
  CHECK(opts.seed == 9);
  CHECK(opts.reward == MockReward::Length);
  CHECK(opts.judge_verdict == "tie");
  CHECK_FALSE(opts.batched_n);
  CHECK(opts.feedback.keyword_rate == doctest::Approx(1.0));
  CHECK(opts.script.at("abc") == std::vector<std::string>{"one"});
  CHECK(mock_options_from_json("{}", 17).seed == 17);
  CHECK_THROWS_AS(mock_options_from_json("{\"reward\": \"bogus\"}"), Error);
}

TEST_CASE("chat wire format") {
  HttpEndpoint ep;
  ep.model = "m";
  auto req = request_for("hi", 2);
  req.task_suffix = "go";
  const auto body = json::parse(encode_chat_body(ep, req));
  CHECK(body["model"] == "m");
  CHECK(body["n"] == 2);
  CHECK(body["messages"].size() == 2);
  CHECK(body["messages"][1]["content"] == "go");

  const auto decoded = decode_chat_body(
      R"({"choices":[{"index":1,"message":{"content":"b"}},{"index":0,"message":{"content":"a"}}],
          "usage":{"prompt_tokens":3,"completion_tokens":5}})",
      2);
  CHECK(decoded.texts == std::vector<std::string>{"a", "b"});
  CHECK(decoded.usage.completion_tokens == 5);
  CHECK_THROWS_AS(decode_chat_body(R"({"choices":[]})", 1), Error);
  CHECK_THROWS_AS(decode_chat_body("not json", 1), Error);

  CHECK(decode_reward_body(R"({"score": 1.5})") == doctest::Approx(1.5));
  CHECK(decode_reward_body(R"({"choices":[{"message":{"content":"reward:-2.25"}}]})") ==
        doctest::Approx(-2.25));
  CHECK_THROWS_AS(decode_reward_body(R"({"score": "x"})"), Error);
}

TEST_CASE("HTTP client against a local OpenAI-style server") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int hit = hits++;
    if (hit == 0) {
      res.status = 503;
      return;
    }
    const auto body = json::parse(req.body);
    if (body.contains("n")) {
      json choices = json::array();
      for (int i = 0; i < body["n"].get<int>(); ++i) {
        choices.push_back({{"index", i}, {"message", {{"role", "assistant"}, {"content", "c" + std::to_string(i)}}}});
      }
      res.set_content(json{{"choices", choices}, {"usage", {{"prompt_tokens", 1}, {"completion_tokens", 2}}}}.dump(),
                      "application/json");
    }
  });
  server.Post("/r/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"score": 0.75})", "application/json");
  });
  server.Post("/bad/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  HttpChatBackend chat(HttpEndpoint::from_url(base + "/v1", "m", ""));
  const auto result = complete(chat, request_for("hi", 3), fast_retry(3));
  CHECK(result.texts == std::vector<std::string>{"c0", "c1", "c2"});
  CHECK(hits.load() == 2);

  HttpRewardBackend reward(HttpEndpoint::from_url(base + "/r", "rm", ""));
  CHECK(score(reward, Conversation::single_prompt("q"), "a", fast_retry(1)) == doctest::Approx(0.75));

  HttpChatBackend bad(HttpEndpoint::from_url(base + "/bad", "m", ""));
  try {
    complete(bad, request_for("hi"), fast_retry(3));
    FAIL("expected a client error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedResponse);
  }

  server.stop();
  thread.join();

  auto ep = HttpEndpoint::from_url(base + "/v1", "m", "");
  ep.timeout = std::chrono::seconds(1);
  HttpChatBackend down(ep);
  try {
    complete(down, request_for("hi"), fast_retry(2));
    FAIL("expected EndpointUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EndpointUnavailable);
  }
}
