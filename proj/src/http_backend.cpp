#include <cmath>
#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "fescale/backends.hpp"

namespace fescale {

namespace {

using nlohmann::json;

struct SplitUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigInvalid, "endpoint URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  out.path_prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

json messages_json(const std::vector<Turn>& turns) {
  json arr = json::array();
  for (const auto& t : turns) {
    arr.push_back({{"role", std::string(to_string(t.role))}, {"content", t.content}});
  }
  return arr;
}

std::string post(const HttpEndpoint& endpoint, const std::string& body) {
  const SplitUrl url = split_url(endpoint.base_url);
  httplib::Client client(url.scheme_host_port);
  client.set_connection_timeout(endpoint.timeout);
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  }
  auto res = client.Post(url.path_prefix + "/chat/completions", headers, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::EndpointUnavailable,
                endpoint.base_url + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    // Throttling and server-side failures are transient; other statuses mean
    // the request itself was rejected and retrying it cannot help.
    const bool transient = res->status == 408 || res->status == 429 || res->status >= 500;
    throw Error(transient ? ErrorCode::EndpointUnavailable : ErrorCode::MalformedResponse,
                endpoint.base_url + ": HTTP " + std::to_string(res->status));
  }
  return res->body;
}

}  // namespace

HttpEndpoint HttpEndpoint::from_url(std::string base_url, std::string model,
                                    const std::string& api_key_env) {
  HttpEndpoint endpoint;
  endpoint.base_url = std::move(base_url);
  endpoint.model = std::move(model);
  if (!api_key_env.empty()) {
    if (const char* key = std::getenv(api_key_env.c_str())) endpoint.api_key = key;
  }
  return endpoint;
}

std::string encode_chat_body(const HttpEndpoint& endpoint, const ChatRequest& request) {
  json body = {
      {"model", endpoint.model},
      {"messages", messages_json(request.messages())},
      {"temperature", request.params.temperature},
      {"top_p", request.params.top_p},
      {"max_tokens", request.params.max_tokens},
      {"n", request.params.n},
  };
  return body.dump();
}

ChatResult decode_chat_body(std::string_view body, int expected_n) {
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("choices") ||
      !doc["choices"].is_array()) {
    throw Error(ErrorCode::MalformedResponse, "chat reply has no choices array");
  }
  const auto& choices = doc["choices"];
  if (static_cast<int>(choices.size()) != expected_n) {
    throw Error(ErrorCode::MalformedResponse, "expected " + std::to_string(expected_n) +
                                                  " choices, got " + std::to_string(choices.size()));
  }
  // Choices may arrive out of order; "index" is authoritative when present.
  ChatResult result;
  result.texts.resize(choices.size());
  std::vector<bool> seen(choices.size(), false);
  for (std::size_t i = 0; i < choices.size(); ++i) {
    const auto& choice = choices[i];
    const auto* content = choice.contains("message") && choice["message"].is_object() &&
                                  choice["message"].contains("content")
                              ? &choice["message"]["content"]
                              : nullptr;
    if (content == nullptr || !content->is_string()) {
      throw Error(ErrorCode::MalformedResponse, "choice without message content");
    }
    std::size_t slot = i;
    if (choice.contains("index") && choice["index"].is_number_integer()) {
      const auto idx = choice["index"].get<long long>();
      if (idx < 0 || idx >= static_cast<long long>(choices.size())) {
        throw Error(ErrorCode::MalformedResponse, "choice index out of range");
      }
      slot = static_cast<std::size_t>(idx);
    }
    if (seen[slot]) throw Error(ErrorCode::MalformedResponse, "duplicate choice index");
    seen[slot] = true;
    result.texts[slot] = content->get<std::string>();
  }
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const auto& usage = doc["usage"];
    result.usage.prompt_tokens = usage.value("prompt_tokens", std::int64_t{0});
    result.usage.completion_tokens = usage.value("completion_tokens", std::int64_t{0});
  }
  return result;
}

double decode_reward_body(std::string_view body) {
  json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::MalformedResponse, "reward reply is not a JSON object");
  }
  if (doc.contains("score")) {
    if (!doc["score"].is_number()) throw Error(ErrorCode::MalformedResponse, "score is not a number");
    return doc["score"].get<double>();
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    throw Error(ErrorCode::MalformedResponse, "reward reply has neither score nor choices");
  }
  const auto& message = doc["choices"][0].value("message", json::object());
  if (!message.contains("content") || !message["content"].is_string()) {
    throw Error(ErrorCode::MalformedResponse, "reward choice without content");
  }
  std::string content = message["content"].get<std::string>();
  if (const auto at = content.rfind("reward:"); at != std::string::npos) {
    content = content.substr(at + 7);
  }
  const char* begin = content.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin) throw Error(ErrorCode::MalformedResponse, "reward content is not a number");
  return value;
}

ChatResult HttpChatBackend::complete_once(const ChatRequest& request) const {
  return decode_chat_body(post(endpoint_, encode_chat_body(endpoint_, request)), request.params.n);
}

double HttpRewardBackend::score_once(const Conversation& conversation,
                                     std::string_view response) const {
  auto turns = conversation.turns();
  turns.push_back(Turn{Role::Assistant, std::string(response)});
  json body = {{"model", endpoint_.model}, {"messages", messages_json(turns)}};
  return decode_reward_body(post(endpoint_, body.dump()));
}

}  // namespace fescale
