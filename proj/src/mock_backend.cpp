#include <array>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "fescale/backends.hpp"
#include "fescale/hashing.hpp"
#include "fescale/prompting.hpp"

namespace fescale {

namespace {

// None of these tokens is a constructive-criticism keyword, so neutral
// synthetic feedback scores zero.
constexpr std::array<std::string_view, 64> kWords = {
    "system",    "latency",   "cluster",  "request",  "replica",   "leader",   "quorum",
    "partition", "network",   "storage",  "cache",    "memory",    "thread",   "queue",
    "message",   "protocol",  "version",  "schema",   "index",     "query",    "buffer",
    "signal",    "process",   "kernel",   "service",  "gateway",   "token",    "vector",
    "model",     "gradient",  "sample",   "dataset",  "feature",   "metric",   "budget",
    "channel",   "record",    "window",   "segment",  "snapshot",  "journal",  "epoch",
    "design",    "example",   "section",  "summary",  "context",   "detail",   "answer",
    "approach",  "algorithm", "tradeoff", "outline",  "reference", "argument", "estimate",
    "structure", "principle", "workflow", "boundary", "interface", "runtime",  "pipeline",
    "overview"};

constexpr std::array<std::string_view, 6> kNeutralFeedback = {
    "The response addresses the main question about the {w}.",
    "It explains the {w} in a clear and organized way.",
    "The formatting makes the {w} easy to follow.",
    "The response stays on topic and discusses the {w}.",
    "The tone is appropriate and the {w} is described accurately.",
    "It covers the {w} with a reasonable level of detail."};

constexpr std::array<std::string_view, 6> kConstructiveFeedback = {
    "However, the discussion of the {w} is too brief.",
    "The response would benefit from a concrete example of the {w}.",
    "It lacks a clear explanation of the {w}.",
    "The section on the {w} could improve with more precise wording.",
    "The answer is accurate, but the {w} is never defined.",
    "However, it does not mention how the {w} interacts with the {w}."};

constexpr std::array<std::string_view, 6> kProgrammingLanguages = {"Python", "C++", "Java",
                                                                   "None",   "Go",  "None"};
constexpr std::array<std::string_view, 5> kNaturalLanguages = {"None", "French", "Spanish",
                                                               "None", "German"};

enum class RequestKind { Response, Feedback, Edit, YesNo, Verdict, Complexity, ProgLang, NatLang };

RequestKind classify(const ChatRequest& request) {
  const auto messages = request.messages();
  const std::string& last = messages.back().content;
  auto starts = [&](std::string_view p) { return std::string_view(last).starts_with(p); };
  auto has = [&](std::string_view p) { return last.find(p) != std::string::npos; };
  // Instructions arrive either as a trailing turn or appended to a flattened transcript.
  if (messages.back().role == Role::User) {
    if (has(templates::kFeedbackInstruction)) return RequestKind::Feedback;
    if (has(templates::kEditInstruction) || has(templates::kEditWithoutFeedbackInstruction)) {
      return RequestKind::Edit;
    }
  }
  if (last.find(templates::kJudgeQuestion) != std::string::npos) return RequestKind::YesNo;
  if (starts(templates::kPairwiseJudgeHeader)) return RequestKind::Verdict;
  if (starts(templates::kComplexityPrediction)) return RequestKind::Complexity;
  if (starts(templates::kProgrammingLanguageId)) return RequestKind::ProgLang;
  if (starts(templates::kNaturalLanguageId)) return RequestKind::NatLang;
  return RequestKind::Response;
}

class Synth {
 public:
  explicit Synth(std::uint64_t seed) : rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  std::string_view word() { return kWords[static_cast<std::size_t>(uniform(0, static_cast<int>(kWords.size()) - 1))]; }

  template <std::size_t N>
  std::string_view pick(const std::array<std::string_view, N>& items) {
    return items[static_cast<std::size_t>(uniform(0, static_cast<int>(N) - 1))];
  }

  std::string fill(std::string_view pattern) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
      const auto at = pattern.find("{w}", pos);
      out += pattern.substr(pos, at == std::string_view::npos ? std::string_view::npos : at - pos);
      if (at == std::string_view::npos) break;
      out += word();
      pos = at + 3;
    }
    return out;
  }

  std::string sentence() {
    const int len = uniform(6, 14);
    std::string s;
    for (int i = 0; i < len; ++i) {
      std::string w(word());
      if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      if (i > 0) s += ' ';
      s += w;
    }
    s += '.';
    return s;
  }

  std::string paragraph(int min_sentences, int max_sentences) {
    const int count = uniform(min_sentences, max_sentences);
    std::string out;
    for (int i = 0; i < count; ++i) {
      if (i > 0) out += ' ';
      out += sentence();
    }
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

std::int64_t word_count(std::string_view text) {
  std::int64_t count = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

std::string last_assistant(const Conversation& conversation) {
  const auto& turns = conversation.turns();
  for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
    if (it->role == Role::Assistant) return it->content;
  }
  return {};
}

}  // namespace

MockBackend::MockBackend(MockOptions options) : options_(std::move(options)) {}

std::string MockBackend::synthesize(const ChatRequest& request, int sample_index) const {
  const std::string fingerprint = request_fingerprint(request);
  Synth synth(derive_seed(derive_seed(options_.seed, fingerprint),
                          static_cast<std::uint64_t>(sample_index)));

  switch (classify(request)) {
    case RequestKind::Feedback: {
      const auto& profile = options_.feedback;
      HelpfulnessLevel level = synth.unit() < profile.perfectly_rate
                                   ? HelpfulnessLevel::Perfectly
                                   : static_cast<HelpfulnessLevel>(synth.uniform(0, 3));
      const bool constructive =
          level != HelpfulnessLevel::Perfectly && synth.unit() < profile.keyword_rate;
      std::string out = helpfulness_prefix(level);
      const int neutral = synth.uniform(1, 3);
      for (int i = 0; i < neutral; ++i) {
        out += ' ';
        out += synth.fill(synth.pick(kNeutralFeedback));
      }
      if (constructive) {
        const int count = synth.uniform(1, 3);
        for (int i = 0; i < count; ++i) {
          out += ' ';
          out += synth.fill(synth.pick(kConstructiveFeedback));
        }
      }
      return out;
    }
    case RequestKind::Edit: {
      std::string base = last_assistant(request.conversation);
      if (!base.empty()) base += ' ';
      return base + synth.paragraph(1, 3);
    }
    case RequestKind::YesNo:
      return synth.unit() < 0.7 ? "Yes" : "No";
    case RequestKind::Verdict: {
      if (options_.judge_verdict) return *options_.judge_verdict;
      const int v = synth.uniform(0, 2);
      return v == 0 ? "A" : v == 1 ? "B" : "tie";
    }
    case RequestKind::Complexity:
      return "[" + std::to_string(synth.uniform(1, 5)) + "]";
    case RequestKind::ProgLang:
      return std::string(synth.pick(kProgrammingLanguages));
    case RequestKind::NatLang:
      return std::string(synth.pick(kNaturalLanguages));
    case RequestKind::Response:
      break;
  }
  return synth.paragraph(2, 6);
}

ChatResult MockBackend::complete_once(const ChatRequest& request) const {
  chat_calls_.fetch_add(1, std::memory_order_relaxed);
  ChatResult result;
  result.texts.reserve(static_cast<std::size_t>(request.params.n));

  const auto scripted = options_.script.find(request_fingerprint(request));
  for (int i = 0; i < request.params.n; ++i) {
    const int sample = request.sample_offset + i;
    if (scripted != options_.script.end() && !scripted->second.empty()) {
      const auto& outs = scripted->second;
      result.texts.push_back(outs[static_cast<std::size_t>(sample) % outs.size()]);
    } else {
      result.texts.push_back(synthesize(request, sample));
    }
  }

  for (const auto& turn : request.messages()) result.usage.prompt_tokens += word_count(turn.content);
  for (const auto& text : result.texts) result.usage.completion_tokens += word_count(text);
  return result;
}

double MockBackend::score_once(const Conversation& conversation, std::string_view response) const {
  score_calls_.fetch_add(1, std::memory_order_relaxed);
  if (options_.reward == MockReward::Length) return static_cast<double>(response.size());
  std::uint64_t h = fnv1a64(render_transcript(conversation));
  h = fnv1a64("\x1d", h);
  h = fnv1a64(response, h);
  const std::uint64_t bits = derive_seed(options_.seed, h);
  // 53 high bits -> [0,1), then spread to [-5,5).
  const double unit = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return unit * 10.0 - 5.0;
}

MockOptions mock_options_from_json(std::string_view json_text, std::uint64_t default_seed) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("mock script is not JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ConfigInvalid, "mock script must be a JSON object");

  MockOptions options;
  try {
    options.seed = doc.value("seed", default_seed);
    if (doc.contains("script")) {
      for (const auto& [fingerprint, outputs] : doc.at("script").items()) {
        options.script[fingerprint] = outputs.get<std::vector<std::string>>();
      }
    }
    if (doc.contains("feedback_profile")) {
      const auto& profile = doc.at("feedback_profile");
      options.feedback.perfectly_rate = profile.value("perfectly_rate", options.feedback.perfectly_rate);
      options.feedback.keyword_rate = profile.value("keyword_rate", options.feedback.keyword_rate);
    }
    const std::string reward = doc.value("reward", std::string("hash"));
    if (reward == "length") {
      options.reward = MockReward::Length;
    } else if (reward != "hash") {
      throw Error(ErrorCode::ConfigInvalid, "mock reward must be \"hash\" or \"length\"");
    }
    if (doc.contains("judge_verdict") && !doc.at("judge_verdict").is_null()) {
      options.judge_verdict = doc.at("judge_verdict").get<std::string>();
    }
    options.batched_n = doc.value("batched_n", true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("bad mock script: ") + e.what());
  }
  return options;
}

MockOptions mock_options_from_file(const std::string& path, std::uint64_t default_seed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InputUnreadable, "cannot open mock script " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return mock_options_from_json(buffer.str(), default_seed);
}

}  // namespace fescale
