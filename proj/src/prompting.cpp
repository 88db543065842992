#include "fescale/prompting.hpp"

#include <cctype>

namespace fescale {

std::string_view to_string(TemplateKind kind) noexcept {
  switch (kind) {
    case TemplateKind::FeedbackGeneration: return "feedback_generation";
    case TemplateKind::EditWithFeedback: return "edit_with_feedback";
    case TemplateKind::EditWithoutFeedback: return "edit_without_feedback";
    case TemplateKind::ChangeSummaryJudge: return "change_summary_judge";
    case TemplateKind::ProgrammingLanguageId: return "programming_language_id";
    case TemplateKind::NaturalLanguageId: return "natural_language_id";
    case TemplateKind::ComplexityPrediction: return "complexity_prediction";
  }
  return "unknown";
}

namespace {

void require_assistant_last(const Conversation& conversation) {
  if (conversation.empty() || conversation.last_role() != Role::Assistant) {
    throw Error(ErrorCode::LastTurnNotAssistant, "template needs a response to evaluate");
  }
}

std::string with_transcript(const Conversation& conversation, std::string_view instruction) {
  std::string out = render_transcript(conversation);
  out += "\n\n";
  out += instruction;
  return out;
}

std::string with_prompt(std::string_view instruction, std::string_view prompt) {
  std::string out(instruction);
  out += "\n\n";
  out += prompt;
  return out;
}

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string feedback_instruction() { return std::string(templates::kFeedbackInstruction); }

std::string edit_instruction(const std::optional<FeedbackSet>& feedback_set) {
  std::string out(templates::kEditInstruction);
  if (!feedback_set) {
    out += "\n\n";
    out += templates::kNoFeedbackFiller;
    return out;
  }
  for (const auto& fb : feedback_set->items()) {
    out += "\n\n";
    out += fb.raw_text;
  }
  return out;
}

std::string edit_without_feedback_instruction() {
  return std::string(templates::kEditWithoutFeedbackInstruction);
}

std::string render_feedback_prompt(const Conversation& conversation) {
  require_assistant_last(conversation);
  return with_transcript(conversation, templates::kFeedbackInstruction);
}

std::string render_edit_prompt(const Conversation& conversation,
                               const std::optional<FeedbackSet>& feedback_set) {
  require_assistant_last(conversation);
  return with_transcript(conversation, edit_instruction(feedback_set));
}

std::string render_edit_without_feedback_prompt(const Conversation& conversation) {
  require_assistant_last(conversation);
  return with_transcript(conversation, templates::kEditWithoutFeedbackInstruction);
}

std::string render_judge_prompt(std::string_view change_summary, std::string_view feedback) {
  if (change_summary.empty()) throw Error(ErrorCode::EmptyInput, "change summary is empty");
  if (feedback.empty()) throw Error(ErrorCode::EmptyInput, "feedback is empty");
  std::string out = "Change Summary: ";
  out += change_summary;
  out += "\n\nFeedback: ";
  out += feedback;
  out += "\n\n";
  out += templates::kJudgeQuestion;
  return out;
}

std::string render_programming_language_prompt(std::string_view prompt) {
  return with_prompt(templates::kProgrammingLanguageId, prompt);
}

std::string render_natural_language_prompt(std::string_view prompt) {
  return with_prompt(templates::kNaturalLanguageId, prompt);
}

std::string render_complexity_prompt(std::string_view prompt) {
  return with_prompt(templates::kComplexityPrediction, prompt);
}

std::string render_pairwise_judge_prompt(const Conversation& prompt, std::string_view response_a,
                                         std::string_view response_b) {
  std::string out(templates::kPairwiseJudgeHeader);
  out += "\n\n[Conversation]\n";
  out += render_transcript(prompt);
  out += "\n\n[Assistant A]\n";
  out += response_a;
  out += "\n\n[Assistant B]\n";
  out += response_b;
  out += "\n\n";
  out += templates::kPairwiseJudgeVerdict;
  return out;
}

bool parse_yes_no(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && !is_alpha(reply[i])) ++i;
  std::size_t j = i;
  while (j < reply.size() && is_alpha(reply[j])) ++j;
  const std::string token = lower(reply.substr(i, j - i));
  if (token == "yes") return true;
  if (token == "no") return false;
  throw Error(ErrorCode::UnparseableJudgement, "expected Yes or No, got \"" + std::string(reply) + "\"");
}

int parse_complexity(std::string_view reply) {
  for (std::size_t i = 0; i < reply.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) continue;
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
    const std::string_view digits = reply.substr(i, j - i);
    if (digits.size() == 1 && digits[0] >= '1' && digits[0] <= '5') return digits[0] - '0';
    i = j;
  }
  throw Error(ErrorCode::UnparseableScore, "no score in [1,5] in \"" + std::string(reply) + "\"");
}

std::optional<std::string> parse_language(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && std::isspace(static_cast<unsigned char>(reply[i]))) ++i;
  std::size_t j = i;
  while (j < reply.size() && !std::isspace(static_cast<unsigned char>(reply[j]))) ++j;
  std::string token = lower(reply.substr(i, j - i));
  while (!token.empty() && std::ispunct(static_cast<unsigned char>(token.back())) &&
         token.back() != '+' && token.back() != '#') {
    token.pop_back();
  }
  if (token.empty() || token == "none") return std::nullopt;
  return token;
}

}  // namespace fescale
