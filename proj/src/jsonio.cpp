#include "fescale/jsonio.hpp"

namespace fescale {

using nlohmann::json;

json conversation_to_json(const Conversation& conversation) {
  json arr = json::array();
  for (const auto& turn : conversation.turns()) {
    arr.push_back({{"role", std::string(to_string(turn.role))}, {"content", turn.content}});
  }
  return arr;
}

Conversation conversation_from_json(const json& value) {
  if (!value.is_array()) throw Error(ErrorCode::SchemaViolation, "conversation must be an array");
  std::vector<Turn> turns;
  for (const auto& item : value) {
    if (!item.is_object() || !item.contains("role") || !item.contains("content") ||
        !item["role"].is_string() || !item["content"].is_string()) {
      throw Error(ErrorCode::SchemaViolation, "turn needs string role and content");
    }
    const auto role = role_from_string(item["role"].get<std::string>());
    if (!role) throw Error(ErrorCode::SchemaViolation, "unknown role " + item["role"].dump());
    turns.push_back(Turn{*role, item["content"].get<std::string>()});
  }
  try {
    return Conversation(std::move(turns));
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaViolation, e.what());
  }
}

json provenance_to_json(const Provenance& provenance) {
  if (const auto* init = std::get_if<InitialProvenance>(&provenance)) {
    return {{"type", "initial"}, {"sample_index", init->sample_index}};
  }
  const auto& edit = std::get<EditedProvenance>(provenance);
  return {{"type", "edited"},
          {"parent_response_index", edit.parent_response_index},
          {"feedback_set_index", edit.feedback_set_index},
          {"edit_sample_index", edit.edit_sample_index}};
}

PromptRow prompt_row_from_json(const json& value, std::size_t row_number) {
  const std::string where = "row " + std::to_string(row_number);
  if (!value.is_object()) throw Error(ErrorCode::SchemaViolation, where + ": not an object");
  PromptRow row;
  if (value.contains("prompt_id")) {
    const auto& id = value["prompt_id"];
    if (id.is_string()) {
      row.prompt_id = id.get<std::string>();
    } else if (id.is_number_integer()) {
      row.prompt_id = std::to_string(id.get<long long>());
    } else {
      throw Error(ErrorCode::SchemaViolation, where + ": prompt_id must be a string or integer");
    }
  } else {
    row.prompt_id = std::to_string(row_number);
  }
  try {
    if (value.contains("conversation")) {
      row.conversation = conversation_from_json(value["conversation"]);
    } else if (value.contains("prompt") && value["prompt"].is_string()) {
      row.conversation = Conversation::single_prompt(value["prompt"].get<std::string>());
    } else {
      throw Error(ErrorCode::SchemaViolation, "needs \"conversation\" or \"prompt\"");
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaViolation, where + ": " + e.what());
  }
  return row;
}

}  // namespace fescale
