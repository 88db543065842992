#pragma once

// Chat-completion and reward-scoring clients.
//
// Every backend implements a single-attempt call (complete_once / score_once)
// and must be safe to call from many threads at once. The free functions
// complete() and score() layer the retry policy and the result contracts on
// top, so the HTTP client, the mock, and test doubles share one code path.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fescale/core.hpp"

namespace fescale {

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    return *this;
  }
  bool operator==(const TokenUsage&) const = default;
};

struct ChatRequest {
  Conversation conversation;
  /// Sent as a trailing user turn when present.
  std::optional<std::string> task_suffix;
  SamplingParams params;
  /// Index of the first sample this request stands for when a batch is split
  /// into several calls. The mock uses it; HTTP endpoints ignore it.
  int sample_offset = 0;

  std::vector<Turn> messages() const;
};

/// Stable hex digest of (rendered messages, temperature, top_p, max_tokens).
std::string request_fingerprint(const ChatRequest& request);

struct ChatResult {
  std::vector<std::string> texts;
  TokenUsage usage;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_backoff{500};
  double backoff_multiplier = 2.0;

  void validate() const;
  std::chrono::milliseconds backoff_before(int attempt) const;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string name() const = 0;
  /// Whether one call can return params.n samples.
  virtual bool supports_batched_n() const { return true; }
  /// One attempt. Throws EndpointUnavailable for transient failures (retried)
  /// and MalformedResponse for undecodable payloads (not retried).
  virtual ChatResult complete_once(const ChatRequest& request) const = 0;
};

class RewardBackend {
 public:
  virtual ~RewardBackend() = default;
  virtual std::string name() const = 0;
  virtual double score_once(const Conversation& conversation, std::string_view response) const = 0;
};

/// Retries EndpointUnavailable per policy and guarantees texts.size() == params.n.
/// Non-batching backends receive n single-sample calls.
ChatResult complete(const ChatBackend& backend, const ChatRequest& request,
                    const RetryPolicy& retry);

/// Scores a response to a conversation ending in a user turn; the result is finite.
double score(const RewardBackend& backend, const Conversation& conversation,
             std::string_view response, const RetryPolicy& retry);

// ---------------------------------------------------------------------------
// Mock backend

enum class MockReward { Hash, Length };

/// Shapes synthetic feedback: the fraction rated perfectly helpful and the
/// fraction carrying constructive-criticism keywords.
struct MockFeedbackProfile {
  double perfectly_rate = 0.2;
  double keyword_rate = 0.6;
};

struct MockOptions {
  std::uint64_t seed = 0;
  /// fingerprint -> outputs; sample i of a scripted request gets outputs[i % size].
  std::map<std::string, std::vector<std::string>> script;
  MockFeedbackProfile feedback;
  MockReward reward = MockReward::Hash;
  /// Fixed verdict for unscripted pairwise-judge requests ("A", "B", "tie").
  std::optional<std::string> judge_verdict;
  bool batched_n = true;
};

/// Deterministic stand-in for both endpoints. Outputs are a pure function of
/// (request content, sample index, seed); unscripted requests get synthetic
/// text shaped for the template that produced them.
class MockBackend final : public ChatBackend, public RewardBackend {
 public:
  explicit MockBackend(MockOptions options);

  std::string name() const override { return "mock"; }
  bool supports_batched_n() const override { return options_.batched_n; }
  ChatResult complete_once(const ChatRequest& request) const override;
  double score_once(const Conversation& conversation, std::string_view response) const override;

  const MockOptions& options() const noexcept { return options_; }
  std::int64_t chat_calls() const noexcept { return chat_calls_.load(); }
  std::int64_t score_calls() const noexcept { return score_calls_.load(); }

  /// Synthetic output for one sample; exposed for tests.
  std::string synthesize(const ChatRequest& request, int sample_index) const;

 private:
  MockOptions options_;
  mutable std::atomic<std::int64_t> chat_calls_{0};
  mutable std::atomic<std::int64_t> score_calls_{0};
};

/// Reads a mock script: {"seed", "script", "feedback_profile", "reward",
/// "judge_verdict", "batched_n"}. `default_seed` applies when "seed" is absent.
MockOptions mock_options_from_json(std::string_view json_text, std::uint64_t default_seed = 0);
MockOptions mock_options_from_file(const std::string& path, std::uint64_t default_seed = 0);

MockBackend mock_register(std::map<std::string, std::vector<std::string>> script,
                          std::uint64_t seed);

// ---------------------------------------------------------------------------
// HTTP backends (OpenAI-style chat-completion wire format)

struct HttpEndpoint {
  /// e.g. "http://127.0.0.1:8000/v1"; requests go to <base_url>/chat/completions.
  std::string base_url;
  std::string model;
  std::string api_key;
  std::chrono::seconds timeout{120};
  bool batched_n = true;

  /// Reads the token from `api_key_env` when set.
  static HttpEndpoint from_url(std::string base_url, std::string model,
                               const std::string& api_key_env = "FESCALE_API_KEY");
};

class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string name() const override { return endpoint_.base_url + "#" + endpoint_.model; }
  bool supports_batched_n() const override { return endpoint_.batched_n; }
  ChatResult complete_once(const ChatRequest& request) const override;

 private:
  HttpEndpoint endpoint_;
};

/// Posts the conversation plus the candidate as a trailing assistant turn.
/// Accepts either {"score": x} or a chat reply whose content is "x" or "reward:x".
class HttpRewardBackend final : public RewardBackend {
 public:
  explicit HttpRewardBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string name() const override { return endpoint_.base_url + "#" + endpoint_.model; }
  double score_once(const Conversation& conversation, std::string_view response) const override;

 private:
  HttpEndpoint endpoint_;
};

// Wire helpers, exposed for tests of the JSON bodies.
std::string encode_chat_body(const HttpEndpoint& endpoint, const ChatRequest& request);
ChatResult decode_chat_body(std::string_view body, int expected_n);
double decode_reward_body(std::string_view body);

}  // namespace fescale
