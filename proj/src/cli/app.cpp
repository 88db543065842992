#include <ostream>

#include <CLI11.hpp>

#include "fescale/cli.hpp"

namespace fescale::cli {

namespace {

struct EndpointFlags {
  bool mock = false;
  std::string mock_script;
  std::uint64_t seed = 0;
  int workers = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
};

void add_common(CLI::App* sub, CommonOptions& common, EndpointFlags& flags, bool judge_only) {
  auto& e = common.endpoints;
  if (!judge_only) {
    sub->add_option("--endpoint", e.endpoint, "Generator chat-completion base URL");
    sub->add_option("--model", e.model, "Generator model name");
    sub->add_option("--feedback-endpoint", e.feedback_endpoint, "Feedback model base URL");
    sub->add_option("--feedback-model", e.feedback_model, "Feedback model name");
    sub->add_option("--edit-endpoint", e.edit_endpoint, "Edit model base URL");
    sub->add_option("--edit-model", e.edit_model, "Edit model name");
    sub->add_option("--reward-endpoint", e.reward_endpoint, "Reward model base URL");
    sub->add_option("--reward-model", e.reward_model, "Reward model name");
  }
  sub->add_option("--judge-endpoint", e.judge_endpoint, "Judge model base URL");
  sub->add_option("--judge-model", e.judge_model, "Judge model name");
  sub->add_flag("--mock", flags.mock, "Use the built-in deterministic mock for every unset endpoint");
  sub->add_option("--mock-script", flags.mock_script, "JSON mock script (implies --mock)")
      ->check(CLI::ExistingFile);
  sub->add_option("--api-key-env", e.api_key_env, "Environment variable holding the bearer token");
  sub->add_flag("--no-batched-n", e.no_batched_n, "Issue one request per sample");
  flags.seed_opt = sub->add_option("--seed", flags.seed, "Master seed");
  flags.workers_opt = sub->add_option("--workers", flags.workers, "Worker budget")
                          ->check(CLI::PositiveNumber);
  sub->add_option("--out-dir", common.out_dir, "Output directory");
  sub->add_flag("--force", common.force, "Overwrite an existing run in --out-dir");
}

void finish_common(CommonOptions& common, const EndpointFlags& flags) {
  if (flags.mock || !flags.mock_script.empty()) common.endpoints.mock = flags.mock_script;
  if (flags.seed_opt->count() > 0) common.seed = flags.seed;
  if (flags.workers_opt->count() > 0) common.workers = flags.workers;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feedback-and-edit inference-time scaling toolkit", "fescale"};
  app.require_subcommand(1);

  RunOptions run;
  EndpointFlags run_flags;
  std::vector<std::string> run_set;
  std::string feedback_mode;
  int responses = 0, raw_feedback = 0, effective_feedback = 0, edits = 0;
  auto* run_cmd = app.add_subcommand("run", "Run the feedback-edit pipeline over a prompts file");
  run_cmd->add_option("prompts", run.prompts_file, "Prompts JSONL")->required();
  run_cmd->add_option("--config", run.config_file, "Plain-text key = value config")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--set", run_set, "Config override key=value (repeatable)")
      ->each([](const std::string& kv) {
        if (kv.find('=') == std::string::npos) throw CLI::ValidationError("--set", "expected key=value");
      });
  auto* r_opt = run_cmd->add_option("--responses", responses, "Initial responses per prompt");
  auto* f_opt = run_cmd->add_option("--raw-feedback", raw_feedback, "Raw feedback samples per response");
  auto* e_opt = run_cmd->add_option("--effective-feedback", effective_feedback,
                                    "Effective feedback kept in ranked mode");
  auto* g_opt = run_cmd->add_option("--edits", edits, "Edits per feedback set");
  auto* m_opt = run_cmd->add_option("--feedback-mode", feedback_mode,
                                    "baseline_random or ranked_effective");
  add_common(run_cmd, run.common, run_flags, false);

  RunOptions bon;
  EndpointFlags bon_flags;
  auto* bon_cmd = app.add_subcommand("bestofn", "Best-of-N sampling with the reward model");
  bon_cmd->add_option("prompts", bon.prompts_file, "Prompts JSONL")->required();
  bon_cmd->add_option("-n,--n", bon.best_of_n, "Samples per prompt")
      ->required()
      ->check(CLI::PositiveNumber);
  bon_cmd->add_option("--config", bon.config_file, "Plain-text key = value config")
      ->check(CLI::ExistingFile);
  add_common(bon_cmd, bon.common, bon_flags, false);

  PrepOptions prep;
  EndpointFlags prep_flags;
  auto* prep_cmd = app.add_subcommand("prep", "Build training datasets from annotation JSONL");
  prep_cmd->add_option("subcommand", prep.subcommand, "feedback | edit | preference | batches | stats | ingest")
      ->required()
      ->check(CLI::IsMember({"feedback", "edit", "preference", "batches", "stats", "ingest"}));
  prep_cmd->add_option("input", prep.input, "Input JSONL")->required();
  prep_cmd->add_option("--tuples-per-batch", prep.tuples_per_batch, "Tuples per reward-model batch");
  add_common(prep_cmd, prep.common, prep_flags, true);

  EvalOptions eval;
  EndpointFlags eval_flags;
  bool no_shuffle = false;
  auto* eval_cmd = app.add_subcommand("eval", "Pairwise judge evaluation of two response files");
  eval_cmd->add_option("responses_a", eval.responses_a, "Responses JSONL for system A")->required();
  eval_cmd->add_option("responses_b", eval.responses_b, "Responses JSONL for system B")->required();
  eval_cmd->add_flag("--no-shuffle", no_shuffle, "Always show system A first");
  eval_cmd->add_option("--resamples", eval.resamples, "Bootstrap resamples");
  eval_cmd->add_option("--level", eval.level, "Confidence level");
  add_common(eval_cmd, eval.common, eval_flags, true);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run_cmd->parsed()) {
    finish_common(run.common, run_flags);
    for (const auto& kv : run_set) {
      const auto eq = kv.find('=');
      run.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (r_opt->count()) run.overrides.emplace_back("responses", std::to_string(responses));
    if (f_opt->count()) run.overrides.emplace_back("raw_feedback", std::to_string(raw_feedback));
    if (e_opt->count()) {
      run.overrides.emplace_back("effective_feedback", std::to_string(effective_feedback));
    }
    if (g_opt->count()) run.overrides.emplace_back("edits", std::to_string(edits));
    if (m_opt->count()) run.overrides.emplace_back("feedback_mode", feedback_mode);
    return cmd_run(run, out, err);
  }
  if (bon_cmd->parsed()) {
    finish_common(bon.common, bon_flags);
    return cmd_run(bon, out, err);
  }
  if (prep_cmd->parsed()) {
    finish_common(prep.common, prep_flags);
    return cmd_prep(prep, out, err);
  }
  finish_common(eval.common, eval_flags);
  eval.shuffle = !no_shuffle;
  return cmd_eval(eval, out, err);
}

}  // namespace fescale::cli
