#pragma once

// Prompt templates for the feedback, edit, and judge models, and parsers for
// the short structured replies they ask for.

#include <optional>
#include <string>
#include <string_view>

#include "fescale/core.hpp"

namespace fescale {

enum class TemplateKind {
  FeedbackGeneration,
  EditWithFeedback,
  EditWithoutFeedback,
  ChangeSummaryJudge,
  ProgrammingLanguageId,
  NaturalLanguageId,
  ComplexityPrediction,
};

std::string_view to_string(TemplateKind kind) noexcept;

namespace templates {

inline constexpr std::string_view kFeedbackInstruction =
    "Evaluate the response to the previous prompt in terms of how helpful it is overall. "
    "Start the evaluation with the statement - The response is "
    "{not / slightly / partially / mostly / perfectly} helpful. "
    "Then provide a brief explanation of the evaluation in 2 to 10 sentences.";

inline constexpr std::string_view kEditInstruction =
    "Edit the response to the previous prompt based on the following feedback:";

inline constexpr std::string_view kNoFeedbackFiller = "<None>";

inline constexpr std::string_view kEditWithoutFeedbackInstruction =
    "Edit the response to the previous prompt to improve it.";

inline constexpr std::string_view kJudgeQuestion =
    "Does the change summary address issues mentioned in the feedback? Answer only Yes or No";

inline constexpr std::string_view kProgrammingLanguageId =
    "Please identify if expertise in any programming language is required to adequately "
    "address the following prompt. If there is more than one programming language needed, "
    "select the one that most relevant to the prompt. Provide only a one-word answer for the "
    "programming language if any is needed, or None otherwise. Here is the prompt:";

inline constexpr std::string_view kNaturalLanguageId =
    "Please identify if knowledge of languages other than English is required to adequately "
    "address the following prompt. If there is more than one other language needed, select "
    "the one that most relevant to the prompt. Provide only a one-word answer for the language "
    "if any is needed, or None otherwise. Here is the prompt:";

inline constexpr std::string_view kComplexityPrediction =
    "Please evaluate the complexity of the following prompt based on the number of "
    "instructional intentions and the number of constraints. Provide a score between 1 and 5, "
    "where 1 represents very simple and straightforward, and 5 represents highly complex and "
    "intricate. Respond with this format only: [score]. Here is the prompt:";

/// Pairwise judge used by the evaluation harness (not one of the annotation templates).
inline constexpr std::string_view kPairwiseJudgeHeader =
    "Please act as an impartial judge and evaluate the quality of the two responses provided "
    "by AI assistants to the conversation below. Choose the assistant that is more helpful "
    "overall. Do not let response order or length influence your decision.";

inline constexpr std::string_view kPairwiseJudgeVerdict =
    "Reply with a single token: A if Assistant A is better, B if Assistant B is better, or tie.";

}  // namespace templates

/// Instruction alone (the trailing user turn sent to the feedback model).
std::string feedback_instruction();
/// Instruction alone for an edit request; nullopt feedback renders the <None> filler.
std::string edit_instruction(const std::optional<FeedbackSet>& feedback_set);
std::string edit_without_feedback_instruction();

/// Conversation transcript followed by the feedback instruction.
std::string render_feedback_prompt(const Conversation& conversation);
std::string render_edit_prompt(const Conversation& conversation,
                               const std::optional<FeedbackSet>& feedback_set);
std::string render_edit_without_feedback_prompt(const Conversation& conversation);
std::string render_judge_prompt(std::string_view change_summary, std::string_view feedback);
std::string render_programming_language_prompt(std::string_view prompt);
std::string render_natural_language_prompt(std::string_view prompt);
std::string render_complexity_prompt(std::string_view prompt);
std::string render_pairwise_judge_prompt(const Conversation& prompt, std::string_view response_a,
                                         std::string_view response_b);

bool parse_yes_no(std::string_view reply);
int parse_complexity(std::string_view reply);
/// Lower-cased first token of a one-word answer; "none" maps to nullopt.
std::optional<std::string> parse_language(std::string_view reply);

}  // namespace fescale
