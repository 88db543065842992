#pragma once

// Pairwise LLM-as-judge harness: position-shuffled judging, win-rate with
// half-credit ties, and a percentile bootstrap interval.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fescale/backends.hpp"
#include "fescale/core.hpp"

namespace fescale {

enum class Outcome { Win, Loss, Tie };
std::string_view to_string(Outcome outcome) noexcept;

enum class Verdict { A, B, Tie };
/// First token, case-insensitive, brackets and punctuation stripped.
std::optional<Verdict> parse_verdict(std::string_view reply);

struct MatchResult {
  std::string prompt_id;
  Outcome outcome = Outcome::Tie;
  std::string judge_raw;
  bool swapped = false;      // response_b was shown first
  bool unparseable = false;  // verdict missing; counted as a tie
};

/// Whether the seed puts response_b in the first position.
bool presentation_swapped(std::uint64_t seed);

/// Maps a verdict on the presented order back to response_a's outcome.
Outcome outcome_from_verdict(Verdict verdict, bool swapped);

MatchResult judge_pair(std::string prompt_id, const Conversation& prompt,
                       std::string_view response_a, std::string_view response_b,
                       const ChatBackend& judge, std::uint64_t seed, const RetryPolicy& retry,
                       bool shuffle = true);

/// (wins + ties / 2) / total; throws EmptyResults.
double win_rate(std::span<const MatchResult> results);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Win-rate of each bootstrap resample (prompt-level, with replacement). The
/// i-th resample draws from its own seed, so the output is identical for
/// every worker count.
std::vector<double> bootstrap_win_rates(std::span<const double> scores, int resamples,
                                        std::uint64_t seed, int workers);
std::vector<double> bootstrap_win_rates_serial(std::span<const double> scores, int resamples,
                                               std::uint64_t seed);

Interval bootstrap_ci(std::span<const MatchResult> results, double level = 0.95,
                      int resamples = 1000, std::uint64_t seed = 0, int workers = 1);

/// 1 for a win, 0.5 for a tie, 0 for a loss.
std::vector<double> outcome_scores(std::span<const MatchResult> results);

struct EvalReport {
  std::vector<MatchResult> results;
  double win_rate = 0.0;
  Interval ci;
  double level = 0.95;
};

std::string report_markdown(const EvalReport& report);
std::string report_csv(const EvalReport& report);

}  // namespace fescale
