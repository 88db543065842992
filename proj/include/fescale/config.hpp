#pragma once

// Plain-text run configuration: one `key = value` per line, `#` starts a comment.
//
//   responses = 8
//   raw_feedback = 64
//   effective_feedback = 16
//   edits = 1
//   feedback_mode = ranked_effective

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fescale/pipeline.hpp"

namespace fescale {

/// Throws ConfigInvalid for an unknown key or an unparseable value.
void apply_config_entry(ScalingConfig& config, std::string_view key, std::string_view value);

/// Applies every entry of a config file's text on top of `config`.
void apply_config_text(ScalingConfig& config, std::string_view text);
void apply_config_file(ScalingConfig& config, const std::string& path);

std::vector<std::string> config_keys();
nlohmann::json config_to_json(const ScalingConfig& config);

}  // namespace fescale
