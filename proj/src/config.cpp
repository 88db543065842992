#include "fescale/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fescale {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::ConfigInvalid,
                "bad value \"" + std::string(value) + "\" for " + std::string(key));
  }
  return out;
}

using Setter = std::function<void(ScalingConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"responses", [](auto& c, auto k, auto v) { c.responses = parse_number<int>(k, v); }},
      {"raw_feedback", [](auto& c, auto k, auto v) { c.raw_feedback = parse_number<int>(k, v); }},
      {"effective_feedback",
       [](auto& c, auto k, auto v) { c.effective_feedback = parse_number<int>(k, v); }},
      {"edits", [](auto& c, auto k, auto v) { c.edits = parse_number<int>(k, v); }},
      {"feedback_mode",
       [](auto& c, auto, auto v) {
         const auto mode = feedback_mode_from_string(v);
         if (!mode) {
           throw Error(ErrorCode::ConfigInvalid, "feedback_mode must be baseline_random or ranked_effective");
         }
         c.feedback_mode = *mode;
       }},
      {"initial_temperature",
       [](auto& c, auto k, auto v) { c.initial_params.temperature = parse_number<double>(k, v); }},
      {"initial_top_p",
       [](auto& c, auto k, auto v) { c.initial_params.top_p = parse_number<double>(k, v); }},
      {"initial_max_tokens",
       [](auto& c, auto k, auto v) { c.initial_params.max_tokens = parse_number<int>(k, v); }},
      {"edit_temperature",
       [](auto& c, auto k, auto v) { c.edit_params.temperature = parse_number<double>(k, v); }},
      {"edit_top_p", [](auto& c, auto k, auto v) { c.edit_params.top_p = parse_number<double>(k, v); }},
      {"edit_max_tokens",
       [](auto& c, auto k, auto v) { c.edit_params.max_tokens = parse_number<int>(k, v); }},
      {"feedback_top_p",
       [](auto& c, auto k, auto v) { c.feedback_top_p = parse_number<double>(k, v); }},
      {"feedback_max_tokens",
       [](auto& c, auto k, auto v) { c.feedback_max_tokens = parse_number<int>(k, v); }},
      {"seed", [](auto& c, auto k, auto v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"workers", [](auto& c, auto k, auto v) { c.workers = parse_number<int>(k, v); }},
      {"retry_attempts",
       [](auto& c, auto k, auto v) { c.retry.max_attempts = parse_number<int>(k, v); }},
      {"retry_backoff_ms",
       [](auto& c, auto k, auto v) {
         c.retry.base_backoff = std::chrono::milliseconds(parse_number<std::int64_t>(k, v));
       }},
      {"retry_multiplier",
       [](auto& c, auto k, auto v) { c.retry.backoff_multiplier = parse_number<double>(k, v); }},
  };
  return table;
}

}  // namespace

void apply_config_entry(ScalingConfig& config, std::string_view key, std::string_view value) {
  const auto it = setters().find(trim(key));
  if (it == setters().end()) {
    throw Error(ErrorCode::ConfigInvalid, "unknown config key \"" + std::string(key) + "\"");
  }
  it->second(config, trim(key), trim(value));
}

void apply_config_text(ScalingConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigInvalid,
                  "config line " + std::to_string(line_no) + " is not key = value");
    }
    try {
      apply_config_entry(config, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigInvalid, "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(ScalingConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "cannot read config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(config, buffer.str());
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, _] : setters()) keys.push_back(key);
  return keys;
}

nlohmann::json config_to_json(const ScalingConfig& c) {
  return {{"responses", c.responses},
          {"raw_feedback", c.raw_feedback},
          {"effective_feedback", c.effective_feedback},
          {"edits", c.edits},
          {"feedback_mode", to_string(c.feedback_mode)},
          {"initial_temperature", c.initial_params.temperature},
          {"initial_top_p", c.initial_params.top_p},
          {"initial_max_tokens", c.initial_params.max_tokens},
          {"edit_temperature", c.edit_params.temperature},
          {"edit_top_p", c.edit_params.top_p},
          {"edit_max_tokens", c.edit_params.max_tokens},
          {"feedback_top_p", c.feedback_top_p},
          {"feedback_max_tokens", c.feedback_max_tokens},
          {"seed", c.seed},
          {"workers", c.workers},
          {"retry_attempts", c.retry.max_attempts},
          {"retry_backoff_ms", c.retry.base_backoff.count()},
          {"retry_multiplier", c.retry.backoff_multiplier}};
}

}  // namespace fescale
