#include "fescale/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include <openssl/sha.h>

#include "fescale/backends.hpp"
#include "fescale/config.hpp"
#include "fescale/dataset_prep.hpp"
#include "fescale/error.hpp"
#include "fescale/eval.hpp"
#include "fescale/hashing.hpp"
#include "fescale/jsonio.hpp"
#include "fescale/parallel.hpp"
#include "fescale/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fescale::cli {

std::string git_blob_hash(std::string_view content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob.append(content);
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json RunManifest::to_json() const {
  return {{"command", command},       {"status", status},         {"config", config},
          {"endpoints", endpoints},   {"seed", seed},             {"started_at", started_at},
          {"finished_at", finished_at}, {"outputs", outputs},     {"input_hashes", input_hashes}};
}

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::LadderUndefined:
    case ErrorCode::SchemaViolation:
    case ErrorCode::InputUnreadable:
    case ErrorCode::OutputExists:
    case ErrorCode::PromptIdMismatch:
    case ErrorCode::InvalidSamplingParams:
      return kExitConfig;
    default:
      return kExitFailure;
  }
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

std::string dump_line(const json& value) {
  return value.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InputUnreadable, "cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Non-empty lines of a JSONL document, paired with their 1-based line numbers.
std::vector<std::pair<std::size_t, json>> parse_jsonl(const std::string& text) {
  std::vector<std::pair<std::size_t, json>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.emplace_back(line_no, json::parse(line));
    } catch (const json::parse_error&) {
      throw Error(ErrorCode::SchemaViolation, "row " + std::to_string(line_no) + ": invalid JSON");
    }
  }
  return rows;
}

/// Owns every backend a command needs; role accessors fall back to the
/// generator endpoint and finally to the mock.
class BackendSet {
 public:
  BackendSet(const EndpointOptions& opts, std::uint64_t seed) : opts_(opts) {
    if (opts.mock) {
      MockOptions mock = opts.mock->empty() ? MockOptions{} : mock_options_from_file(*opts.mock, seed);
      if (opts.mock->empty()) mock.seed = seed;
      mock_ = std::make_unique<MockBackend>(std::move(mock));
    }
  }

  const ChatBackend& generator() { return chat(opts_.endpoint, opts_.model, "--endpoint", generator_); }
  const ChatBackend& feedback() {
    if (opts_.feedback_endpoint.empty()) return generator();
    return chat(opts_.feedback_endpoint, pick(opts_.feedback_model), "--feedback-endpoint", feedback_);
  }
  const ChatBackend& editor() {
    if (opts_.edit_endpoint.empty()) return generator();
    return chat(opts_.edit_endpoint, pick(opts_.edit_model), "--edit-endpoint", editor_);
  }
  const ChatBackend& judge() {
    return chat(opts_.judge_endpoint, opts_.judge_model, "--judge-endpoint", judge_);
  }
  const RewardBackend& reward() {
    if (mock_ && opts_.reward_endpoint.empty()) return *mock_;
    if (opts_.reward_endpoint.empty()) {
      throw Error(ErrorCode::ConfigInvalid, "a reward endpoint is required (--reward-endpoint or --mock)");
    }
    if (!reward_) {
      reward_ = std::make_unique<HttpRewardBackend>(
          HttpEndpoint::from_url(opts_.reward_endpoint, opts_.reward_model, opts_.api_key_env));
    }
    return *reward_;
  }

  json describe(bool with_judge, bool with_reward) {
    json out = json::object();
    if (with_judge) {
      out["judge"] = judge().name();
      return out;
    }
    out["generator"] = generator().name();
    out["feedback"] = feedback().name();
    out["editor"] = editor().name();
    if (with_reward) out["reward"] = reward().name();
    return out;
  }

 private:
  std::string pick(const std::string& model) const { return model.empty() ? opts_.model : model; }

  const ChatBackend& chat(const std::string& url, const std::string& model, const char* flag,
                          std::unique_ptr<ChatBackend>& slot) {
    if (url.empty()) {
      if (mock_) return *mock_;
      throw Error(ErrorCode::ConfigInvalid, std::string("missing ") + flag + " (or --mock)");
    }
    if (!slot) {
      auto endpoint = HttpEndpoint::from_url(url, model, opts_.api_key_env);
      endpoint.batched_n = !opts_.no_batched_n;
      slot = std::make_unique<HttpChatBackend>(std::move(endpoint));
    }
    return *slot;
  }

  EndpointOptions opts_;
  std::unique_ptr<MockBackend> mock_;
  std::unique_ptr<ChatBackend> generator_, feedback_, editor_, judge_;
  std::unique_ptr<RewardBackend> reward_;
};

/// Writes the manifest, refusing to replace an existing one unless forced.
class ManifestWriter {
 public:
  ManifestWriter(const CommonOptions& common, RunManifest manifest)
      : path_(common.out_dir / "manifest.json"), manifest_(std::move(manifest)) {
    if (fs::exists(path_) && !common.force) {
      throw Error(ErrorCode::OutputExists,
                  path_.string() + " exists; pass --force to overwrite the previous run");
    }
    fs::create_directories(common.out_dir);
    manifest_.started_at = utc_timestamp();
    manifest_.status = "partial";
    flush();
  }

  RunManifest& manifest() { return manifest_; }

  void finish(std::string status) {
    manifest_.status = std::move(status);
    manifest_.finished_at = utc_timestamp();
    flush();
  }

 private:
  void flush() {
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw Error(ErrorCode::InputUnreadable, "cannot write " + path_.string());
    out << manifest_.to_json().dump(2) << '\n';
  }

  fs::path path_;
  RunManifest manifest_;
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(ErrorCode::InputUnreadable, "cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
}

void write_drops(const fs::path& path, const DropLog& drops,
                 const std::vector<std::string>& record_ids) {
  auto out = open_output(path);
  for (const auto& d : drops) {
    json row = {{"stage", d.stage}, {"record", d.record}, {"reason", d.reason}};
    if (d.record < record_ids.size()) row["record_id"] = record_ids[d.record];
    if (d.item >= 0) row["item"] = d.item;
    out << dump_line(row) << '\n';
  }
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    ScalingConfig config;
    if (!options.config_file.empty()) apply_config_file(config, options.config_file);
    for (const auto& [key, value] : options.overrides) apply_config_entry(config, key, value);
    if (options.common.seed) config.seed = *options.common.seed;
    if (options.common.workers) config.workers = *options.common.workers;

    const bool best_of_n = options.best_of_n > 0;
    if (best_of_n) {
      ScalingConfig check = config;
      check.responses = options.best_of_n;
      check.feedback_mode = FeedbackMode::BaselineRandom;
      check.validate();
    } else {
      config.validate();
    }

    const std::string prompts_text = read_file(options.prompts_file);
    std::vector<PromptRow> prompts;
    for (const auto& [line_no, value] : parse_jsonl(prompts_text)) {
      prompts.push_back(prompt_row_from_json(value, line_no));
    }

    BackendSet backend_set(options.common.endpoints, config.seed);
    const Backends backends(backend_set.generator(), backend_set.feedback(), backend_set.editor(),
                            backend_set.reward());

    RunManifest manifest;
    manifest.command = best_of_n ? "bestofn" : "run";
    manifest.config = config_to_json(config);
    if (best_of_n) manifest.config["best_of_n"] = options.best_of_n;
    manifest.endpoints = backend_set.describe(false, true);
    manifest.seed = config.seed;
    const fs::path responses_path = options.common.out_dir / "responses.jsonl";
    const fs::path trace_path = options.common.out_dir / "trace.jsonl";
    manifest.outputs = {responses_path.string(), trace_path.string()};
    manifest.input_hashes[options.prompts_file] = git_blob_hash(prompts_text);
    if (!options.config_file.empty()) {
      manifest.input_hashes[options.config_file] = git_blob_hash(read_file(options.config_file));
    }
    ManifestWriter writer(options.common, std::move(manifest));

    auto responses = open_output(responses_path);
    auto trace = open_output(trace_path);
    std::size_t failed = 0;
    for (const auto& prompt : prompts) {
      ScalingConfig local = config;
      local.seed = derive_seed(config.seed, prompt.prompt_id);
      json row = {{"prompt_id", prompt.prompt_id},
                  {"conversation", conversation_to_json(prompt.conversation)}};
      try {
        const PipelineResult result =
            best_of_n ? run_best_of_n(prompt.conversation, options.best_of_n, local, backends)
                      : run_pipeline(prompt.conversation, local, backends);
        row["response"] = result.winner.text;
        row["reward"] = result.winner.reward ? json(*result.winner.reward) : json(nullptr);
        row["provenance"] = provenance_to_json(result.winner.provenance);
        row["pool_size"] = result.trace.pool.size();
        write_trace_jsonl(trace, result.trace, prompt.prompt_id);
      } catch (const Error& e) {
        ++failed;
        row["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
        trace << dump_line({{"prompt_id", prompt.prompt_id},
                            {"event", "error"},
                            {"code", std::string(to_string(e.code()))},
                            {"message", e.what()}})
              << '\n';
        err << "prompt " << prompt.prompt_id << " failed: " << e.what() << '\n';
      }
      responses << dump_line(row) << '\n';
      responses.flush();
      trace.flush();
    }
    responses.close();
    trace.close();

    writer.finish(failed == 0 ? "complete" : "failed");
    out << prompts.size() << " prompts, " << failed << " failed; wrote "
        << responses_path.string() << '\n';
    return failed == 0 ? kExitOk : kExitFailure;
  });
}

// ---------------------------------------------------------------------------

namespace {

json feedback_demo_to_json(const FeedbackDemoRow& row) {
  return {{"record_id", row.record_id},
          {"domain", std::string(to_string(row.domain))},
          {"conversation", conversation_to_json(row.conversation)},
          {"feedback", row.feedback}};
}

json edit_demo_to_json(const EditDemoRow& row) {
  return {{"record_id", row.record_id},
          {"domain", std::string(to_string(row.domain))},
          {"conversation", conversation_to_json(row.conversation)},
          {"feedback", row.feedback},
          {"target", row.target}};
}

std::vector<AnnotationRecord> load_annotations(const std::string& text) {
  std::vector<AnnotationRecord> records;
  for (const auto& [line_no, value] : parse_jsonl(text)) {
    records.push_back(annotation_from_json(value, line_no));
  }
  return records;
}

}  // namespace

int cmd_prep(const PrepOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    static const std::set<std::string> kSubcommands = {"feedback", "edit",  "preference",
                                                       "batches",  "stats", "ingest"};
    if (!kSubcommands.count(options.subcommand)) {
      throw Error(ErrorCode::ConfigInvalid, "unknown prep subcommand \"" + options.subcommand + "\"");
    }
    if (options.tuples_per_batch == 0) {
      throw Error(ErrorCode::ConfigInvalid, "--tuples-per-batch must be positive");
    }
    const std::uint64_t seed = options.common.seed.value_or(0);
    const int workers = options.common.workers.value_or(1);
    if (workers < 1) throw Error(ErrorCode::ConfigInvalid, "--workers must be positive");

    const std::string input_text = read_file(options.input);
    const fs::path dir = options.common.out_dir;
    const fs::path drops_path = dir / "drops.jsonl";
    const fs::path csv_path = dir / "stats.csv";
    const fs::path md_path = dir / "stats.md";

    // Parse before touching the output directory so schema errors leave nothing behind.
    std::vector<AnnotationRecord> records;
    std::vector<PreferencePair> pairs_in;
    std::vector<PromptRow> prompts_in;
    std::vector<std::string> record_ids;
    if (options.subcommand == "batches") {
      for (const auto& [line_no, value] : parse_jsonl(input_text)) {
        pairs_in.push_back(preference_from_json(value, line_no));
        record_ids.push_back(pairs_in.back().record_id);
      }
    } else if (options.subcommand == "ingest") {
      for (const auto& [line_no, value] : parse_jsonl(input_text)) {
        prompts_in.push_back(prompt_row_from_json(value, line_no));
        record_ids.push_back(prompts_in.back().prompt_id);
      }
    } else {
      records = load_annotations(input_text);
      for (const auto& r : records) record_ids.push_back(r.id);
    }

    std::unique_ptr<BackendSet> backend_set;
    RunManifest manifest;
    manifest.command = "prep " + options.subcommand;
    manifest.config = {{"subcommand", options.subcommand},
                       {"tuples_per_batch", options.tuples_per_batch},
                       {"workers", workers}};
    manifest.seed = seed;
    if (options.subcommand == "edit") {
      backend_set = std::make_unique<BackendSet>(options.common.endpoints, seed);
      manifest.endpoints = backend_set->describe(true, false);
    }
    manifest.input_hashes[options.input] = git_blob_hash(input_text);

    std::string dataset_name;
    if (options.subcommand == "feedback") dataset_name = "feedback_demo.jsonl";
    if (options.subcommand == "edit") dataset_name = "edit_demo.jsonl";
    if (options.subcommand == "preference") dataset_name = "edit_preference.jsonl";
    if (options.subcommand == "batches") dataset_name = "rm_batches.jsonl";
    if (options.subcommand == "ingest") dataset_name = "prompts.jsonl";
    const fs::path dataset_path = dir / dataset_name;
    if (!dataset_name.empty()) manifest.outputs.push_back(dataset_path.string());
    manifest.outputs.push_back(drops_path.string());
    if (options.subcommand != "batches" && options.subcommand != "ingest") {
      manifest.outputs.push_back(csv_path.string());
      manifest.outputs.push_back(md_path.string());
    }
    ManifestWriter writer(options.common, std::move(manifest));

    DropLog drops;
    std::size_t rows_written = 0;
    std::optional<StatsTable> table;

    if (options.subcommand == "feedback") {
      const auto rows = build_feedback_demo(records, &drops);
      auto f = open_output(dataset_path);
      for (const auto& row : rows) f << dump_line(feedback_demo_to_json(row)) << '\n';
      rows_written = rows.size();
      table = descriptive_stats(stats_rows(std::span<const FeedbackDemoRow>(rows)));
    } else if (options.subcommand == "edit") {
      RetryPolicy retry;
      const auto rows = build_edit_demo(records, backend_set->judge(), retry, workers, &drops);
      auto f = open_output(dataset_path);
      for (const auto& row : rows) f << dump_line(edit_demo_to_json(row)) << '\n';
      rows_written = rows.size();
      table = descriptive_stats(stats_rows(std::span<const EditDemoRow>(rows)));
    } else if (options.subcommand == "preference") {
      const auto pairs = build_edit_preference(records, &drops);
      auto f = open_output(dataset_path);
      for (const auto& p : pairs) f << dump_line(preference_to_json(p)) << '\n';
      rows_written = pairs.size();
      table = descriptive_stats(stats_rows(std::span<const PreferencePair>(pairs)));
    } else if (options.subcommand == "batches") {
      const auto batches = build_rm_batches(pairs_in, options.tuples_per_batch, &drops);
      auto f = open_output(dataset_path);
      for (std::size_t b = 0; b < batches.size(); ++b) {
        for (std::size_t i = 0; i < batches[b].pairs.size(); ++i) {
          json row = preference_to_json(batches[b].pairs[i]);
          row["batch"] = b;
          row["tuple"] = i / 2;
          f << dump_line(row) << '\n';
          ++rows_written;
        }
      }
      out << batches.size() << " batches\n";
    } else if (options.subcommand == "ingest") {
      auto f = open_output(dataset_path);
      for (std::size_t i = 0; i < prompts_in.size(); ++i) {
        const auto& p = prompts_in[i];
        const auto decision = ingest_filter(p.conversation.last().content);
        if (!decision.keep) {
          drops.push_back({"ingest", i, -1, decision.reason});
          continue;
        }
        f << dump_line({{"prompt_id", p.prompt_id},
                        {"conversation", conversation_to_json(p.conversation)}})
          << '\n';
        ++rows_written;
      }
    } else {
      table = descriptive_stats(stats_rows(std::span<const AnnotationRecord>(records)));
    }

    write_drops(drops_path, drops, record_ids);
    if (table) {
      write_text(csv_path, stats_csv(*table));
      write_text(md_path, stats_markdown(*table));
      if (options.subcommand == "stats") out << stats_markdown(*table);
    }
    writer.finish("complete");
    out << options.subcommand << ": " << rows_written << " rows, " << drops.size() << " drops\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

namespace {

struct ResponseRow {
  std::string prompt_id;
  Conversation conversation;
  std::string response;
};

std::vector<ResponseRow> load_responses(const std::string& text) {
  std::vector<ResponseRow> rows;
  std::set<std::string> seen;
  for (const auto& [line_no, value] : parse_jsonl(text)) {
    const PromptRow prompt = prompt_row_from_json(value, line_no);
    const auto it = value.find("response");
    if (it == value.end() || !it->is_string() || it->get<std::string>().empty()) {
      throw Error(ErrorCode::SchemaViolation,
                  "row " + std::to_string(line_no) + ": missing non-empty \"response\"");
    }
    if (!seen.insert(prompt.prompt_id).second) {
      throw Error(ErrorCode::SchemaViolation,
                  "row " + std::to_string(line_no) + ": duplicate prompt_id " + prompt.prompt_id);
    }
    rows.push_back({prompt.prompt_id, prompt.conversation, it->get<std::string>()});
  }
  return rows;
}

}  // namespace

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (options.resamples < 1) throw Error(ErrorCode::ConfigInvalid, "--resamples must be >= 1");
    if (!(options.level > 0.0 && options.level < 1.0)) {
      throw Error(ErrorCode::ConfigInvalid, "--level must lie in (0,1)");
    }
    const std::uint64_t seed = options.common.seed.value_or(0);
    const int workers = options.common.workers.value_or(1);
    if (workers < 1) throw Error(ErrorCode::ConfigInvalid, "--workers must be positive");

    const std::string text_a = read_file(options.responses_a);
    const std::string text_b = read_file(options.responses_b);
    const auto rows_a = load_responses(text_a);
    const auto rows_b = load_responses(text_b);

    std::map<std::string, const ResponseRow*> by_id;
    for (const auto& r : rows_b) by_id[r.prompt_id] = &r;
    std::size_t missing = 0;
    for (const auto& r : rows_a) missing += by_id.count(r.prompt_id) == 0;
    if (missing > 0 || rows_a.size() != rows_b.size()) {
      throw Error(ErrorCode::PromptIdMismatch,
                  "the two response files cover different prompt_id sets (" +
                      std::to_string(missing) + " ids of A missing from B)");
    }
    if (rows_a.empty()) throw Error(ErrorCode::EmptyResults, "no prompts to evaluate");

    BackendSet backend_set(options.common.endpoints, seed);
    const ChatBackend& judge = backend_set.judge();

    RunManifest manifest;
    manifest.command = "eval";
    manifest.config = {{"shuffle", options.shuffle},
                       {"resamples", options.resamples},
                       {"level", options.level},
                       {"workers", workers}};
    manifest.endpoints = backend_set.describe(true, false);
    manifest.seed = seed;
    const fs::path md_path = options.common.out_dir / "report.md";
    const fs::path csv_path = options.common.out_dir / "report.csv";
    manifest.outputs = {md_path.string(), csv_path.string()};
    manifest.input_hashes[options.responses_a] = git_blob_hash(text_a);
    manifest.input_hashes[options.responses_b] = git_blob_hash(text_b);
    ManifestWriter writer(options.common, std::move(manifest));

    const RetryPolicy retry;
    EvalReport report;
    report.level = options.level;
    report.results = parallel_map(rows_a.size(), workers, [&](std::size_t i) {
      const auto& a = rows_a[i];
      const auto& b = *by_id.at(a.prompt_id);
      return judge_pair(a.prompt_id, a.conversation, a.response, b.response, judge,
                        derive_seed(seed, a.prompt_id), retry, options.shuffle);
    });
    report.win_rate = win_rate(report.results);
    report.ci = bootstrap_ci(report.results, options.level, options.resamples, seed, workers);

    write_text(md_path, report_markdown(report));
    write_text(csv_path, report_csv(report));
    writer.finish("complete");

    char line[128];
    std::snprintf(line, sizeof line, "win-rate %.4f  %.0f%% CI (%.4f, %.4f)  n=%zu\n",
                  report.win_rate, options.level * 100.0, report.ci.low, report.ci.high,
                  report.results.size());
    out << line;
    return kExitOk;
  });
}

}  // namespace fescale::cli
