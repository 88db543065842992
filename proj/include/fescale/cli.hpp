#pragma once

// Command-line front end: `fescale run | bestofn | prep <sub> | eval`.
//
// Exit codes: 0 success, 1 a prompt or record failed terminally, 2 a
// configuration, schema, or input error (detected before any model call).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace fescale::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

struct EndpointOptions {
  std::string endpoint;
  std::string model = "default";
  std::string feedback_endpoint;
  std::string feedback_model;
  std::string edit_endpoint;
  std::string edit_model;
  std::string reward_endpoint;
  std::string reward_model = "default";
  std::string judge_endpoint;
  std::string judge_model = "default";
  /// Set (possibly to "") when --mock is given; a non-empty value is a mock script path.
  std::optional<std::string> mock;
  std::string api_key_env = "FESCALE_API_KEY";
  bool no_batched_n = false;
};

struct CommonOptions {
  EndpointOptions endpoints;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::filesystem::path out_dir = "out";
  bool force = false;
};

struct RunOptions {
  CommonOptions common;
  std::string prompts_file;
  std::string config_file;
  /// key=value overrides applied after the config file (CLI flags land here).
  std::vector<std::pair<std::string, std::string>> overrides;
  /// 0 runs the full pipeline; N >= 1 runs best-of-N.
  int best_of_n = 0;
};

struct PrepOptions {
  CommonOptions common;
  std::string subcommand;  // feedback, edit, preference, batches, stats, ingest
  std::string input;
  std::size_t tuples_per_batch = 32;
};

struct EvalOptions {
  CommonOptions common;
  std::string responses_a;
  std::string responses_b;
  bool shuffle = true;
  int resamples = 1000;
  double level = 0.95;
};

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_prep(const PrepOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv (args[0] is the program name) and dispatches.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// ---------------------------------------------------------------------------
// Run manifest

struct RunManifest {
  std::string command;
  std::string status = "partial";  // partial | complete | failed
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json endpoints = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> input_hashes;  // path -> git blob id

  nlohmann::json to_json() const;
};

/// SHA-1 of "blob <size>\0<content>", as `git hash-object` computes it.
std::string git_blob_hash(std::string_view content);
std::string utc_timestamp();

}  // namespace fescale::cli
