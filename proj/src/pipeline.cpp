#include "fescale/pipeline.hpp"

#include <algorithm>
#include <iterator>
#include <random>
#include <unordered_set>

#include "fescale/hashing.hpp"
#include "fescale/parallel.hpp"
#include "fescale/prompting.hpp"

namespace fescale {

std::string_view to_string(FeedbackMode mode) noexcept {
  return mode == FeedbackMode::BaselineRandom ? "baseline_random" : "ranked_effective";
}

std::optional<FeedbackMode> feedback_mode_from_string(std::string_view s) noexcept {
  if (s == "baseline_random") return FeedbackMode::BaselineRandom;
  if (s == "ranked_effective") return FeedbackMode::RankedEffective;
  return std::nullopt;
}

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::Initial: return "initial";
    case Stage::Feedback: return "feedback";
    case Stage::Edit: return "edit";
    case Stage::Select: return "select";
  }
  return "unknown";
}

std::string_view to_string(FilterKind kind) noexcept {
  return kind == FilterKind::Parse ? "parse" : "effective";
}

std::vector<LadderStep> temperature_ladder(int raw_feedback) {
  switch (raw_feedback) {
    case 10: return {{0.7, 10}};
    case 16: return {{0.7, 16}};
    case 32: return {{0.7, 16}, {0.6, 16}};
    case 64: return {{0.5, 16}, {0.6, 16}, {0.7, 16}, {0.8, 16}};
    default:
      throw Error(ErrorCode::LadderUndefined,
                  "no temperature ladder for " + std::to_string(raw_feedback) + " raw feedback");
  }
}

void ScalingConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::ConfigInvalid, what);
  };
  require(responses >= 1, "responses per prompt must be >= 1");
  require(raw_feedback >= 1, "raw feedback per response must be >= 1");
  require(effective_feedback >= 1, "effective feedback must be >= 1");
  require(edits >= 1, "edits per feedback set must be >= 1");
  require(feedback_max_tokens >= 1, "feedback max_tokens must be >= 1");
  require(feedback_top_p > 0.0 && feedback_top_p <= 1.0, "feedback top_p must lie in (0,1]");
  require(workers >= 1, "workers must be >= 1");
  try {
    SamplingParams init = initial_params;
    init.n = 1;
    init.validate();
    SamplingParams edit = edit_params;
    edit.n = 1;
    edit.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
  require(initial_params.temperature > 0.0 || responses == 1,
          "sampling several initial responses needs temperature > 0");
  require(edit_params.temperature > 0.0 || edits == 1,
          "sampling several edits needs temperature > 0");
  retry.validate();
  if (feedback_mode == FeedbackMode::RankedEffective &&
      raw_feedback != 16 && raw_feedback != 32 && raw_feedback != 64) {
    throw Error(ErrorCode::LadderUndefined, "ranked_effective mode needs 16, 32 or 64 raw feedback, got " +
                                                std::to_string(raw_feedback));
  }
}

std::vector<LadderStep> ScalingConfig::feedback_schedule() const {
  if (feedback_mode == FeedbackMode::BaselineRandom) return {{0.7, raw_feedback}};
  return temperature_ladder(raw_feedback);
}

namespace {

struct Job {
  const ChatBackend* backend = nullptr;
  ChatRequest request;
  Stage stage = Stage::Initial;
  int branch = -1;
  int feedback_set = -1;
};

struct JobOutcome {
  ChatResult result;
  CallRecord record;
};

std::vector<JobOutcome> run_jobs(const std::vector<Job>& jobs, const ScalingConfig& config) {
  return parallel_map(jobs.size(), config.workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    JobOutcome out;
    out.result = complete(*job.backend, job.request, config.retry);
    out.record.stage = job.stage;
    out.record.branch = job.branch;
    out.record.feedback_set = job.feedback_set;
    out.record.fingerprint = request_fingerprint(job.request);
    out.record.temperature = job.request.params.temperature;
    out.record.n = job.request.params.n;
    out.record.outputs = out.result.texts;
    out.record.usage = out.result.usage;
    return out;
  });
}

void require_user_last(const Conversation& prompt) {
  if (prompt.empty() || prompt.last_role() != Role::User) {
    throw Error(ErrorCode::LastTurnNotUser, "prompt must end with a user turn");
  }
}

Conversation with_response(const Conversation& prompt, const Candidate& response) {
  require_user_last(prompt);
  if (response.text.empty()) throw Error(ErrorCode::EmptyInput, "response under review is empty");
  return prompt.with_turn(Role::Assistant, response.text);
}

std::vector<Job> feedback_jobs(const Conversation& prompt, const Candidate& response, int branch,
                               const ScalingConfig& config, const ChatBackend& model) {
  const Conversation reviewed = with_response(prompt, response);
  std::vector<Job> jobs;
  for (const auto& step : config.feedback_schedule()) {
    Job job;
    job.backend = &model;
    job.request.conversation = reviewed;
    job.request.task_suffix = feedback_instruction();
    job.request.params = SamplingParams{step.temperature, config.feedback_top_p,
                                        config.feedback_max_tokens, step.count};
    job.stage = Stage::Feedback;
    job.branch = branch;
    jobs.push_back(std::move(job));
  }
  return jobs;
}

/// Parses one branch's raw samples (in ladder order) and removes exact duplicates.
std::vector<Feedback> collect_feedback(std::span<const JobOutcome> outcomes, int branch,
                                       PipelineTrace* trace) {
  std::vector<Feedback> out;
  std::unordered_set<std::string> seen;
  int sample = 0;
  for (const auto& outcome : outcomes) {
    if (trace) trace->calls.push_back(outcome.record);
    for (const auto& text : outcome.result.texts) {
      FilterRecord rec{FilterKind::Parse, branch, sample, false, ""};
      if (!try_parse_helpfulness(text)) {
        rec.reason = "unparseable";
      } else if (!seen.insert(text).second) {
        rec.reason = "duplicate";
      } else {
        rec.kept = true;
        rec.reason = "parsed";
        out.push_back(Feedback::from_text(text, sample, outcome.record.temperature));
      }
      if (trace) trace->filters.push_back(std::move(rec));
      ++sample;
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::AllFeedbackUnparseable,
                "none of " + std::to_string(sample) + " feedback samples had a helpfulness prefix");
  }
  return out;
}

Job edit_job(const Conversation& prompt, const Candidate& response, const FeedbackSet& set,
             const ScalingConfig& config, const ChatBackend& editor, int branch, int set_index) {
  Job job;
  job.backend = &editor;
  job.request.conversation = with_response(prompt, response);
  job.request.task_suffix = edit_instruction(set);
  if (config.edits == 1) {
    job.request.params =
        SamplingParams::greedy(config.edit_params.max_tokens, config.edit_params.top_p);
  } else {
    job.request.params = config.edit_params;
    job.request.params.n = config.edits;
  }
  job.stage = Stage::Edit;
  job.branch = branch;
  job.feedback_set = set_index;
  return job;
}

std::vector<Candidate> collect_edits(const JobOutcome& outcome, int branch, int set_index,
                                     PipelineTrace* trace) {
  if (trace) trace->calls.push_back(outcome.record);
  std::vector<Candidate> out;
  for (std::size_t j = 0; j < outcome.result.texts.size(); ++j) {
    out.push_back(Candidate{outcome.result.texts[j],
                            EditedProvenance{branch, set_index, static_cast<int>(j)},
                            std::nullopt});
  }
  return out;
}

}  // namespace

std::vector<Candidate> generate_initial(const Conversation& prompt, const ScalingConfig& config,
                                        const ChatBackend& generator, PipelineTrace* trace) {
  config.validate();
  require_user_last(prompt);
  Job job;
  job.backend = &generator;
  job.request.conversation = prompt;
  if (config.responses == 1) {
    job.request.params =
        SamplingParams::greedy(config.initial_params.max_tokens, config.initial_params.top_p);
  } else {
    job.request.params = config.initial_params;
    job.request.params.n = config.responses;
  }
  job.stage = Stage::Initial;
  auto outcomes = run_jobs({job}, config);
  if (trace) trace->calls.push_back(outcomes.front().record);

  std::vector<Candidate> out;
  const auto& texts = outcomes.front().result.texts;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.push_back(Candidate{texts[i], InitialProvenance{static_cast<int>(i)}, std::nullopt});
  }
  if (trace) trace->initial = out;
  return out;
}

std::vector<Feedback> generate_feedback(const Conversation& prompt, const Candidate& response,
                                        const ScalingConfig& config, const ChatBackend& model,
                                        PipelineTrace* trace, int branch) {
  config.validate();
  const auto outcomes = run_jobs(feedback_jobs(prompt, response, branch, config, model), config);
  return collect_feedback(outcomes, branch, trace);
}

std::vector<FeedbackSet> select_effective_feedback(const std::vector<Feedback>& feedback,
                                                   const ScalingConfig& config,
                                                   PipelineTrace* trace, int branch) {
  std::vector<std::string> reason(feedback.size());
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < feedback.size(); ++i) {
    if (feedback[i].level == HelpfulnessLevel::Perfectly) {
      reason[i] = "perfectly_helpful";
    } else if (config.feedback_mode == FeedbackMode::RankedEffective &&
               feedback[i].keyword_score == 0) {
      reason[i] = "no_keywords";
    } else {
      survivors.push_back(i);
    }
  }

  std::vector<std::size_t> chosen;
  if (config.feedback_mode == FeedbackMode::BaselineRandom) {
    std::mt19937_64 rng(derive_seed(config.seed, "select/" + std::to_string(branch)));
    std::sample(survivors.begin(), survivors.end(), std::back_inserter(chosen),
                std::min<std::size_t>(3, survivors.size()), rng);
    for (std::size_t i : survivors) reason[i] = "not_chosen";
  } else {
    std::stable_sort(survivors.begin(), survivors.end(), [&](std::size_t a, std::size_t b) {
      if (feedback[a].keyword_score != feedback[b].keyword_score) {
        return feedback[a].keyword_score > feedback[b].keyword_score;
      }
      return feedback[a].sample_index < feedback[b].sample_index;
    });
    const auto keep = std::min<std::size_t>(survivors.size(),
                                            static_cast<std::size_t>(config.effective_feedback));
    chosen.assign(survivors.begin(), survivors.begin() + static_cast<std::ptrdiff_t>(keep));
    for (std::size_t k = keep; k < survivors.size(); ++k) reason[survivors[k]] = "beyond_limit";
  }
  for (std::size_t i : chosen) reason[i] = "selected";

  if (trace) {
    for (std::size_t i = 0; i < feedback.size(); ++i) {
      trace->filters.push_back(FilterRecord{FilterKind::Effective, branch,
                                            feedback[i].sample_index, reason[i] == "selected",
                                            reason[i]});
    }
  }
  if (chosen.empty()) {
    throw Error(ErrorCode::NoEffectiveFeedback,
                "no effective feedback among " + std::to_string(feedback.size()));
  }

  std::vector<FeedbackSet> sets;
  for (std::size_t start = 0; start < chosen.size(); start += 3) {
    std::vector<Feedback> items;
    for (std::size_t k = start; k < std::min(start + 3, chosen.size()); ++k) {
      items.push_back(feedback[chosen[k]]);
    }
    sets.emplace_back(std::move(items));
  }
  return sets;
}

std::vector<Candidate> generate_edits(const Conversation& prompt, const Candidate& response,
                                      const FeedbackSet& set, const ScalingConfig& config,
                                      const ChatBackend& editor, PipelineTrace* trace, int branch,
                                      int set_index) {
  config.validate();
  auto outcomes =
      run_jobs({edit_job(prompt, response, set, config, editor, branch, set_index)}, config);
  return collect_edits(outcomes.front(), branch, set_index, trace);
}

std::size_t select_best(const Conversation& prompt, std::vector<Candidate>& candidates,
                        const RewardBackend& reward, const RetryPolicy& retry, int workers,
                        PipelineTrace* trace) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "nothing to select from");
  const auto rewards = parallel_map(candidates.size(), workers, [&](std::size_t i) {
    return score(reward, prompt, candidates[i].text, retry);
  });
  std::size_t best = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    candidates[i].reward = rewards[i];
    if (rewards[i] > rewards[best]) best = i;
  }
  if (trace) {
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      trace->scores.push_back(ScoreRecord{static_cast<int>(i), rewards[i]});
    }
    trace->selected = static_cast<int>(best);
  }
  return best;
}

PipelineResult run_best_of_n(const Conversation& prompt, int n, const ScalingConfig& config,
                             const Backends& backends) {
  if (n < 1) throw Error(ErrorCode::ConfigInvalid, "best-of-n needs n >= 1");
  ScalingConfig bon = config;
  bon.responses = n;
  bon.feedback_mode = FeedbackMode::BaselineRandom;  // feedback knobs are unused here
  bon.validate();

  PipelineResult result;
  result.trace.kind = "best_of_n";
  auto pool = generate_initial(prompt, bon, backends.generator, &result.trace);
  const auto best = select_best(prompt, pool, backends.reward, bon.retry, bon.workers, &result.trace);
  result.trace.pool = pool;
  result.winner = pool[best];
  return result;
}

PipelineResult run_pipeline(const Conversation& prompt, const ScalingConfig& config,
                            const Backends& backends) {
  config.validate();
  PipelineResult result;
  PipelineTrace& trace = result.trace;
  trace.kind = "pipeline";

  const auto initial = generate_initial(prompt, config, backends.generator, &trace);
  const int branches = static_cast<int>(initial.size());

  // Feedback for every branch in one fan-out.
  std::vector<Job> jobs;
  std::vector<std::size_t> branch_begin;
  for (int b = 0; b < branches; ++b) {
    branch_begin.push_back(jobs.size());
    auto js = feedback_jobs(prompt, initial[b], b, config, backends.feedback);
    std::move(js.begin(), js.end(), std::back_inserter(jobs));
  }
  branch_begin.push_back(jobs.size());
  const auto feedback_outcomes = run_jobs(jobs, config);

  std::vector<std::vector<FeedbackSet>> sets_per_branch(branches);
  for (int b = 0; b < branches; ++b) {
    std::span<const JobOutcome> mine(feedback_outcomes.data() + branch_begin[b],
                                     branch_begin[b + 1] - branch_begin[b]);
    trace.feedback.push_back(collect_feedback(mine, b, &trace));
  }
  for (int b = 0; b < branches; ++b) {
    try {
      sets_per_branch[b] = select_effective_feedback(trace.feedback[b], config, &trace, b);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEffectiveFeedback) throw;
      trace.fallback_branches.push_back(b);
    }
  }
  trace.feedback_sets = sets_per_branch;

  // Edits for every (branch, set) in one fan-out.
  std::vector<Job> edit_jobs;
  for (int b = 0; b < branches; ++b) {
    for (std::size_t s = 0; s < sets_per_branch[b].size(); ++s) {
      edit_jobs.push_back(edit_job(prompt, initial[b], sets_per_branch[b][s], config,
                                   backends.editor, b, static_cast<int>(s)));
    }
  }
  const auto edit_outcomes = run_jobs(edit_jobs, config);

  std::vector<Candidate> pool;
  std::size_t next_edit = 0;
  for (int b = 0; b < branches; ++b) {
    if (sets_per_branch[b].empty()) {
      pool.push_back(initial[b]);
      continue;
    }
    for (std::size_t s = 0; s < sets_per_branch[b].size(); ++s) {
      auto edits = collect_edits(edit_outcomes[next_edit++], b, static_cast<int>(s), &trace);
      std::move(edits.begin(), edits.end(), std::back_inserter(pool));
    }
  }

  const auto best = select_best(prompt, pool, backends.reward, config.retry, config.workers, &trace);
  trace.pool = pool;
  result.winner = pool[best];
  return result;
}

Accounting account(const PipelineTrace& trace) {
  Accounting acc;
  for (const auto& call : trace.calls) {
    auto& stage = acc.stages[static_cast<std::size_t>(call.stage)];
    stage.calls += 1;
    stage.samples += static_cast<std::int64_t>(call.outputs.size());
    stage.usage += call.usage;
    acc.total += call.usage;
  }
  auto& select = acc.stages[static_cast<std::size_t>(Stage::Select)];
  select.calls = static_cast<std::int64_t>(trace.scores.size());
  select.samples = select.calls;
  for (const auto& stage : acc.stages) {
    if (stage.calls > 0) ++acc.parallel_depth;
  }
  return acc;
}

}  // namespace fescale
