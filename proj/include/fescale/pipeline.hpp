#pragma once

// Feedback-Edit-Select orchestration.
//
//   initial responses (R) -> raw feedback per response (F_raw, temperature ladder)
//     -> effective feedback sets (<=3 each) -> edits per set (G) -> reward argmax
//
// Every stage fans its requests out over config.workers threads and joins
// before the next stage starts. Results are reassembled in sample order, so
// the trace is identical for any worker count.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fescale/backends.hpp"
#include "fescale/core.hpp"

namespace fescale {

enum class FeedbackMode { BaselineRandom, RankedEffective };

std::string_view to_string(FeedbackMode mode) noexcept;
std::optional<FeedbackMode> feedback_mode_from_string(std::string_view s) noexcept;

struct LadderStep {
  double temperature = 0.7;
  int count = 0;
  bool operator==(const LadderStep&) const = default;
};

/// Sampling temperatures for a raw-feedback budget; throws LadderUndefined
/// outside {10, 16, 32, 64}.
std::vector<LadderStep> temperature_ladder(int raw_feedback);

struct ScalingConfig {
  int responses = 1;            // initial responses per prompt
  int raw_feedback = 10;        // raw feedback samples per response
  int effective_feedback = 16;  // ranked mode keeps at most this many
  int edits = 1;                // edits per feedback set
  FeedbackMode feedback_mode = FeedbackMode::BaselineRandom;
  SamplingParams initial_params{0.7, 0.9, 2048, 1};
  SamplingParams edit_params{0.7, 0.9, 2048, 1};
  double feedback_top_p = 0.9;
  int feedback_max_tokens = 512;
  std::uint64_t seed = 0;
  int workers = 1;
  RetryPolicy retry;

  /// ConfigInvalid for out-of-range knobs; LadderUndefined for a ranked run
  /// whose raw budget has no ladder.
  void validate() const;
  /// Baseline mode samples everything at 0.7; ranked mode uses the ladder.
  std::vector<LadderStep> feedback_schedule() const;
};

/// Chat endpoints per role. The feedback and edit models default to the
/// generator when not set separately.
struct Backends {
  const ChatBackend& generator;
  const ChatBackend& feedback;
  const ChatBackend& editor;
  const RewardBackend& reward;

  Backends(const ChatBackend& chat, const RewardBackend& reward_model)
      : generator(chat), feedback(chat), editor(chat), reward(reward_model) {}
  Backends(const ChatBackend& gen, const ChatBackend& fb, const ChatBackend& ed,
           const RewardBackend& reward_model)
      : generator(gen), feedback(fb), editor(ed), reward(reward_model) {}
};

enum class Stage { Initial = 0, Feedback = 1, Edit = 2, Select = 3 };
inline constexpr int kStageCount = 4;
std::string_view to_string(Stage stage) noexcept;

enum class FilterKind { Parse, Effective };
std::string_view to_string(FilterKind kind) noexcept;

struct CallRecord {
  Stage stage = Stage::Initial;
  int branch = -1;
  int feedback_set = -1;
  std::string fingerprint;
  double temperature = 0.0;
  int n = 1;
  std::vector<std::string> outputs;
  TokenUsage usage;
};

struct FilterRecord {
  FilterKind filter = FilterKind::Parse;
  int branch = -1;
  int sample_index = 0;
  bool kept = false;
  std::string reason;
};

struct ScoreRecord {
  int pool_index = 0;
  double reward = 0.0;
};

struct PipelineTrace {
  std::string kind = "pipeline";
  std::vector<CallRecord> calls;
  std::vector<FilterRecord> filters;
  std::vector<Candidate> initial;
  std::vector<std::vector<Feedback>> feedback;
  std::vector<std::vector<FeedbackSet>> feedback_sets;
  std::vector<int> fallback_branches;
  std::vector<Candidate> pool;
  std::vector<ScoreRecord> scores;
  int selected = -1;
};

struct PipelineResult {
  Candidate winner;
  PipelineTrace trace;
};

// ---------------------------------------------------------------------------
// Stage operations. Each optionally appends to a trace; `branch` tags records
// with the initial-response index they belong to.

std::vector<Candidate> generate_initial(const Conversation& prompt, const ScalingConfig& config,
                                        const ChatBackend& generator,
                                        PipelineTrace* trace = nullptr);

/// Parsed, de-duplicated feedback in sample order. Throws AllFeedbackUnparseable.
std::vector<Feedback> generate_feedback(const Conversation& prompt, const Candidate& response,
                                        const ScalingConfig& config, const ChatBackend& model,
                                        PipelineTrace* trace = nullptr, int branch = 0);

/// Drops perfectly-helpful feedback, then either samples up to three at random
/// (baseline) or keeps keyword-bearing feedback ranked by score and chunks it
/// into triples (ranked). Throws NoEffectiveFeedback when nothing survives.
std::vector<FeedbackSet> select_effective_feedback(const std::vector<Feedback>& feedback,
                                                   const ScalingConfig& config,
                                                   PipelineTrace* trace = nullptr, int branch = 0);

std::vector<Candidate> generate_edits(const Conversation& prompt, const Candidate& response,
                                      const FeedbackSet& set, const ScalingConfig& config,
                                      const ChatBackend& editor, PipelineTrace* trace = nullptr,
                                      int branch = 0, int set_index = 0);

/// Scores every candidate and returns the index of the first maximum.
std::size_t select_best(const Conversation& prompt, std::vector<Candidate>& candidates,
                        const RewardBackend& reward, const RetryPolicy& retry, int workers = 1,
                        PipelineTrace* trace = nullptr);

PipelineResult run_best_of_n(const Conversation& prompt, int n, const ScalingConfig& config,
                             const Backends& backends);

PipelineResult run_pipeline(const Conversation& prompt, const ScalingConfig& config,
                            const Backends& backends);

struct StageAccount {
  std::int64_t calls = 0;
  std::int64_t samples = 0;
  TokenUsage usage;
};

struct Accounting {
  std::array<StageAccount, kStageCount> stages{};
  TokenUsage total;
  /// Number of sequential stages that issued work.
  int parallel_depth = 0;

  const StageAccount& at(Stage s) const { return stages[static_cast<std::size_t>(s)]; }
};

Accounting account(const PipelineTrace& trace);

/// One JSON object per line; every record carries prompt_id and an "event" tag.
void write_trace_jsonl(std::ostream& out, const PipelineTrace& trace, std::string_view prompt_id);

}  // namespace fescale
