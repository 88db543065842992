#include "fescale/backends.hpp"

#include <cmath>
#include <cstdio>
#include <thread>

#include "fescale/hashing.hpp"

namespace fescale {

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::vector<Turn> ChatRequest::messages() const {
  std::vector<Turn> out = conversation.turns();
  if (task_suffix) out.push_back(Turn{Role::User, *task_suffix});
  return out;
}

std::string request_fingerprint(const ChatRequest& request) {
  std::uint64_t h = fnv1a64("fescale/request/v1");
  for (const auto& turn : request.messages()) {
    h = fnv1a64(to_string(turn.role), h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(turn.content, h);
    h = fnv1a64("\x1e", h);
  }
  char params[96];
  std::snprintf(params, sizeof params, "t=%.6g;p=%.6g;m=%d", request.params.temperature,
                request.params.top_p, request.params.max_tokens);
  h = fnv1a64(params, h);
  return to_hex(h);
}

void RetryPolicy::validate() const {
  if (max_attempts < 1) throw Error(ErrorCode::ConfigInvalid, "retry max_attempts must be >= 1");
  if (base_backoff.count() < 0) throw Error(ErrorCode::ConfigInvalid, "negative backoff");
  if (!(backoff_multiplier >= 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "backoff multiplier must be >= 1");
  }
}

std::chrono::milliseconds RetryPolicy::backoff_before(int attempt) const {
  // attempt is 1-based; no wait before the first one.
  if (attempt <= 1) return std::chrono::milliseconds(0);
  const double scale = std::pow(backoff_multiplier, attempt - 2);
  return std::chrono::milliseconds(static_cast<std::int64_t>(base_backoff.count() * scale));
}

namespace {

template <typename Call>
auto with_retry(const RetryPolicy& retry, const std::string& what, Call&& call) {
  retry.validate();
  std::string last_error;
  for (int attempt = 1; attempt <= retry.max_attempts; ++attempt) {
    const auto wait = retry.backoff_before(attempt);
    if (wait.count() > 0) std::this_thread::sleep_for(wait);
    try {
      return call();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EndpointUnavailable) throw;
      last_error = e.what();
    }
  }
  throw Error(ErrorCode::EndpointUnavailable,
              what + " failed after " + std::to_string(retry.max_attempts) +
                  " attempts: " + last_error);
}

}  // namespace

ChatResult complete(const ChatBackend& backend, const ChatRequest& request,
                    const RetryPolicy& retry) {
  request.params.validate();
  const int n = request.params.n;

  auto checked = [&](const ChatRequest& req) {
    return with_retry(retry, backend.name(), [&] {
      ChatResult r = backend.complete_once(req);
      if (static_cast<int>(r.texts.size()) != req.params.n) {
        throw Error(ErrorCode::MalformedResponse,
                    "expected " + std::to_string(req.params.n) + " completions, got " +
                        std::to_string(r.texts.size()));
      }
      return r;
    });
  };

  if (n == 1 || backend.supports_batched_n()) return checked(request);

  ChatResult out;
  out.texts.reserve(n);
  for (int i = 0; i < n; ++i) {
    ChatRequest single = request;
    single.params.n = 1;
    single.sample_offset = request.sample_offset + i;
    ChatResult r = checked(single);
    out.texts.push_back(std::move(r.texts.front()));
    out.usage += r.usage;
  }
  return out;
}

double score(const RewardBackend& backend, const Conversation& conversation,
             std::string_view response, const RetryPolicy& retry) {
  if (conversation.empty() || conversation.last_role() != Role::User) {
    throw Error(ErrorCode::LastTurnNotUser, "reward scoring needs a conversation ending in a user turn");
  }
  if (response.empty()) throw Error(ErrorCode::EmptyInput, "cannot score an empty response");
  const double value =
      with_retry(retry, backend.name(), [&] { return backend.score_once(conversation, response); });
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::MalformedResponse, "reward endpoint returned a non-finite score");
  }
  return value;
}

MockBackend mock_register(std::map<std::string, std::vector<std::string>> script,
                          std::uint64_t seed) {
  MockOptions options;
  options.seed = seed;
  options.script = std::move(script);
  return MockBackend(std::move(options));
}

}  // namespace fescale
