#include "fescale/core.hpp"

#include <algorithm>
#include <cctype>

namespace fescale {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NoHelpfulnessPrefix: return "NoHelpfulnessPrefix";
    case ErrorCode::InvalidConversation: return "InvalidConversation";
    case ErrorCode::InvalidFeedbackSet: return "InvalidFeedbackSet";
    case ErrorCode::InvalidSamplingParams: return "InvalidSamplingParams";
    case ErrorCode::EndpointUnavailable: return "EndpointUnavailable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::LastTurnNotAssistant: return "LastTurnNotAssistant";
    case ErrorCode::LastTurnNotUser: return "LastTurnNotUser";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnparseableJudgement: return "UnparseableJudgement";
    case ErrorCode::UnparseableScore: return "UnparseableScore";
    case ErrorCode::LadderUndefined: return "LadderUndefined";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::AllFeedbackUnparseable: return "AllFeedbackUnparseable";
    case ErrorCode::NoEffectiveFeedback: return "NoEffectiveFeedback";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::TooFewAnnotators: return "TooFewAnnotators";
    case ErrorCode::NoUsableFeedback: return "NoUsableFeedback";
    case ErrorCode::UnpairedTuple: return "UnpairedTuple";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
    case ErrorCode::PromptIdMismatch: return "PromptIdMismatch";
    case ErrorCode::InputUnreadable: return "InputUnreadable";
    case ErrorCode::OutputExists: return "OutputExists";
  }
  return "Unknown";
}

namespace {

constexpr std::array<std::string_view, 5> kLabels = {"not", "slightly", "partially", "mostly",
                                                     "perfectly"};

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool iequals_prefix(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (lower(text[i]) != lower(prefix[i])) return false;
  }
  return true;
}

std::string_view trim_left(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

}  // namespace

std::string_view label(HelpfulnessLevel level) noexcept { return kLabels[rank(level)]; }

std::optional<HelpfulnessLevel> level_from_label(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kLabels.size(); ++i) {
    if (text.size() == kLabels[i].size() && iequals_prefix(text, kLabels[i])) {
      return static_cast<HelpfulnessLevel>(i);
    }
  }
  return std::nullopt;
}

std::optional<HelpfulnessLevel> level_from_rank(int r) noexcept {
  if (r < 0 || r > 4) return std::nullopt;
  return static_cast<HelpfulnessLevel>(r);
}

std::string_view to_string(Role role) noexcept {
  return role == Role::User ? "user" : "assistant";
}

std::optional<Role> role_from_string(std::string_view s) noexcept {
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  return std::nullopt;
}

Conversation::Conversation(std::vector<Turn> turns) : turns_(std::move(turns)) {
  if (turns_.empty()) throw Error(ErrorCode::InvalidConversation, "conversation has no turns");
  for (std::size_t i = 0; i < turns_.size(); ++i) {
    const Role expected = (i % 2 == 0) ? Role::User : Role::Assistant;
    if (turns_[i].role != expected) {
      throw Error(ErrorCode::InvalidConversation,
                  "turn " + std::to_string(i) + " should be " + std::string(to_string(expected)));
    }
  }
}

Conversation Conversation::single_prompt(std::string user_text) {
  return Conversation({Turn{Role::User, std::move(user_text)}});
}

Role Conversation::last_role() const { return last().role; }

const Turn& Conversation::last() const {
  if (turns_.empty()) throw Error(ErrorCode::InvalidConversation, "conversation has no turns");
  return turns_.back();
}

Conversation Conversation::with_turn(Role role, std::string content) const {
  auto turns = turns_;
  turns.push_back(Turn{role, std::move(content)});
  return Conversation(std::move(turns));
}

Conversation Conversation::without_last() const {
  auto turns = turns_;
  if (!turns.empty()) turns.pop_back();
  return Conversation(std::move(turns));
}

std::string render_transcript(const Conversation& conversation) {
  std::string out;
  for (const auto& turn : conversation.turns()) {
    if (!out.empty()) out += "\n\n";
    out += turn.role == Role::User ? "User: " : "Assistant: ";
    out += turn.content;
  }
  return out;
}

SamplingParams SamplingParams::greedy(int max_tokens, double top_p) {
  return SamplingParams{0.0, top_p, max_tokens, 1};
}

void SamplingParams::validate() const {
  if (!(temperature >= 0.0)) {
    throw Error(ErrorCode::InvalidSamplingParams, "temperature must be >= 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::InvalidSamplingParams, "top_p must lie in (0,1]");
  }
  if (max_tokens <= 0) throw Error(ErrorCode::InvalidSamplingParams, "max_tokens must be > 0");
  if (n <= 0) throw Error(ErrorCode::InvalidSamplingParams, "n must be > 0");
  if (temperature == 0.0 && n != 1) {
    throw Error(ErrorCode::InvalidSamplingParams, "greedy sampling yields exactly one output");
  }
}

Feedback Feedback::from_text(std::string raw_text, int sample_index, double temperature) {
  Feedback fb;
  fb.level = parse_helpfulness(raw_text);
  fb.keyword_score = count_constructive_keywords(raw_text);
  fb.raw_text = std::move(raw_text);
  fb.sample_index = sample_index;
  fb.temperature = temperature;
  return fb;
}

FeedbackSet::FeedbackSet(std::vector<Feedback> items) : items_(std::move(items)) {
  if (items_.empty() || items_.size() > 3) {
    throw Error(ErrorCode::InvalidFeedbackSet,
                "feedback set must hold 1..3 items, got " + std::to_string(items_.size()));
  }
  for (const auto& fb : items_) {
    if (fb.level == HelpfulnessLevel::Perfectly) {
      throw Error(ErrorCode::InvalidFeedbackSet, "perfectly-helpful feedback cannot drive an edit");
    }
  }
}

std::optional<HelpfulnessLevel> try_parse_helpfulness(std::string_view raw_text) noexcept {
  std::string_view text = trim_left(raw_text);
  for (std::string_view prefix : {std::string_view("The response is "),
                                  std::string_view("The model response is ")}) {
    if (!iequals_prefix(text, prefix)) continue;
    std::string_view rest = text.substr(prefix.size());
    std::size_t end = 0;
    while (end < rest.size() && std::isalpha(static_cast<unsigned char>(rest[end]))) ++end;
    auto level = level_from_label(rest.substr(0, end));
    if (!level) continue;
    rest = rest.substr(end);
    if (iequals_prefix(rest, " helpful")) return level;
  }
  return std::nullopt;
}

HelpfulnessLevel parse_helpfulness(std::string_view raw_text) {
  if (auto level = try_parse_helpfulness(raw_text)) return *level;
  std::string head(raw_text.substr(0, 60));
  throw Error(ErrorCode::NoHelpfulnessPrefix, "no helpfulness prefix in \"" + head + "\"");
}

int count_constructive_keywords(std::string_view raw_text) {
  int count = 0;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (token == "however" || token == "but" || token == "benefit" ||
        token.starts_with("improve") || token.starts_with("lack")) {
      ++count;
    }
    token.clear();
  };
  for (char c : raw_text) {
    if (is_alnum(c)) {
      token.push_back(lower(c));
    } else {
      flush();
    }
  }
  flush();
  return count;
}

std::string helpfulness_prefix(HelpfulnessLevel level) {
  return "The response is " + std::string(label(level)) + " helpful.";
}

}  // namespace fescale
