#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fescale {

enum class ErrorCode {
  // core
  NoHelpfulnessPrefix,
  InvalidConversation,
  InvalidFeedbackSet,
  InvalidSamplingParams,
  // backends
  EndpointUnavailable,
  MalformedResponse,
  // prompting
  LastTurnNotAssistant,
  LastTurnNotUser,
  EmptyInput,
  UnparseableJudgement,
  UnparseableScore,
  // pipeline
  LadderUndefined,
  ConfigInvalid,
  AllFeedbackUnparseable,
  NoEffectiveFeedback,
  EmptyCandidates,
  // dataset_prep
  TooFewAnnotators,
  NoUsableFeedback,
  UnpairedTuple,
  SchemaViolation,
  // eval
  EmptyResults,
  UnparseableVerdict,
  PromptIdMismatch,
  // cli
  InputUnreadable,
  OutputExists,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fescale
