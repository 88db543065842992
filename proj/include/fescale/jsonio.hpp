#pragma once

// JSON shapes shared by the dataset, pipeline, and evaluation files.

#include <string>

#include <json.hpp>

#include "fescale/core.hpp"

namespace fescale {

/// [{"role": "user", "content": "..."}, ...]
nlohmann::json conversation_to_json(const Conversation& conversation);
/// Throws SchemaViolation on a malformed or non-alternating turn list.
Conversation conversation_from_json(const nlohmann::json& value);

nlohmann::json provenance_to_json(const Provenance& provenance);

/// A prompts-file row: {"prompt_id": ..., "conversation": [...]} or {"prompt_id": ..., "prompt": "..."}.
struct PromptRow {
  std::string prompt_id;
  Conversation conversation;
};

/// `row_number` is 1-based and used as the id fallback and in error messages.
PromptRow prompt_row_from_json(const nlohmann::json& value, std::size_t row_number);

}  // namespace fescale
