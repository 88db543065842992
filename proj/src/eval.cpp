#include "fescale/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "fescale/hashing.hpp"
#include "fescale/parallel.hpp"
#include "fescale/prompting.hpp"

namespace fescale {

std::string_view to_string(Outcome outcome) noexcept {
  switch (outcome) {
    case Outcome::Win: return "win";
    case Outcome::Loss: return "loss";
    case Outcome::Tie: return "tie";
  }
  return "tie";
}

std::optional<Verdict> parse_verdict(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size() && !std::isalnum(static_cast<unsigned char>(reply[i]))) ++i;
  std::size_t j = i;
  while (j < reply.size() && std::isalnum(static_cast<unsigned char>(reply[j]))) ++j;
  std::string token(reply.substr(i, j - i));
  for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (token == "a") return Verdict::A;
  if (token == "b") return Verdict::B;
  if (token == "tie") return Verdict::Tie;
  return std::nullopt;
}

bool presentation_swapped(std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, "judge/position"));
  return (rng() & 1U) != 0;
}

Outcome outcome_from_verdict(Verdict verdict, bool swapped) {
  if (verdict == Verdict::Tie) return Outcome::Tie;
  const bool first_won = verdict == Verdict::A;
  return first_won != swapped ? Outcome::Win : Outcome::Loss;
}

MatchResult judge_pair(std::string prompt_id, const Conversation& prompt,
                       std::string_view response_a, std::string_view response_b,
                       const ChatBackend& judge, std::uint64_t seed, const RetryPolicy& retry,
                       bool shuffle) {
  if (response_a.empty() || response_b.empty()) {
    throw Error(ErrorCode::EmptyInput, "both responses must be non-empty");
  }
  MatchResult result;
  result.prompt_id = std::move(prompt_id);
  result.swapped = shuffle && presentation_swapped(seed);

  ChatRequest req;
  req.conversation = Conversation::single_prompt(
      result.swapped ? render_pairwise_judge_prompt(prompt, response_b, response_a)
                     : render_pairwise_judge_prompt(prompt, response_a, response_b));
  req.params = SamplingParams::greedy(16);
  result.judge_raw = complete(judge, req, retry).texts.front();

  if (const auto verdict = parse_verdict(result.judge_raw)) {
    result.outcome = outcome_from_verdict(*verdict, result.swapped);
  } else {
    result.outcome = Outcome::Tie;
    result.unparseable = true;
  }
  return result;
}

std::vector<double> outcome_scores(std::span<const MatchResult> results) {
  std::vector<double> out;
  out.reserve(results.size());
  for (const auto& r : results) {
    out.push_back(r.outcome == Outcome::Win ? 1.0 : r.outcome == Outcome::Tie ? 0.5 : 0.0);
  }
  return out;
}

double win_rate(std::span<const MatchResult> results) {
  if (results.empty()) throw Error(ErrorCode::EmptyResults, "no match results");
  double wins = 0.0;
  double ties = 0.0;
  for (const auto& r : results) {
    if (r.outcome == Outcome::Win) wins += 1.0;
    if (r.outcome == Outcome::Tie) ties += 1.0;
  }
  return (wins + 0.5 * ties) / static_cast<double>(results.size());
}

namespace {

double resample_mean(std::span<const double> scores, std::uint64_t seed, int b) {
  std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
  std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) sum += scores[pick(rng)];
  return sum / static_cast<double>(scores.size());
}

/// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<double> bootstrap_win_rates(std::span<const double> scores, int resamples,
                                        std::uint64_t seed, int workers) {
  if (scores.empty()) throw Error(ErrorCode::EmptyResults, "no scores to resample");
  return parallel_map(static_cast<std::size_t>(resamples), workers, [&](std::size_t b) {
    return resample_mean(scores, seed, static_cast<int>(b));
  });
}

std::vector<double> bootstrap_win_rates_serial(std::span<const double> scores, int resamples,
                                               std::uint64_t seed) {
  if (scores.empty()) throw Error(ErrorCode::EmptyResults, "no scores to resample");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) out.push_back(resample_mean(scores, seed, b));
  return out;
}

Interval bootstrap_ci(std::span<const MatchResult> results, double level, int resamples,
                      std::uint64_t seed, int workers) {
  if (results.empty()) throw Error(ErrorCode::EmptyResults, "no match results");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::ConfigInvalid, "level must lie in (0,1)");
  if (resamples < 1) throw Error(ErrorCode::ConfigInvalid, "resamples must be >= 1");

  const auto scores = outcome_scores(results);
  auto rates = bootstrap_win_rates(scores, resamples, seed, workers);
  std::sort(rates.begin(), rates.end());
  const double tail = (1.0 - level) / 2.0;
  const double point = win_rate(results);
  Interval ci{quantile(rates, tail), quantile(rates, 1.0 - tail)};
  ci.low = std::clamp(std::min(ci.low, point), 0.0, 1.0);
  ci.high = std::clamp(std::max(ci.high, point), 0.0, 1.0);
  return ci;
}

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string report_markdown(const EvalReport& report) {
  std::size_t wins = 0, losses = 0, ties = 0, unparseable = 0;
  for (const auto& r : report.results) {
    wins += r.outcome == Outcome::Win;
    losses += r.outcome == Outcome::Loss;
    ties += r.outcome == Outcome::Tie;
    unparseable += r.unparseable;
  }
  std::ostringstream out;
  out << "# Pairwise evaluation\n\n";
  out << "| Prompts | Wins | Losses | Ties | Unparseable | Win-rate | "
      << static_cast<int>(std::lround(report.level * 100)) << "% CI |\n";
  out << "|---|---|---|---|---|---|---|\n";
  out << "| " << report.results.size() << " | " << wins << " | " << losses << " | " << ties
      << " | " << unparseable << " | " << fixed(report.win_rate) << " | (" << fixed(report.ci.low)
      << ", " << fixed(report.ci.high) << ") |\n\n";
  out << "| prompt_id | outcome | swapped | verdict |\n|---|---|---|---|\n";
  for (const auto& r : report.results) {
    std::string verdict = r.judge_raw;
    for (char& c : verdict) {
      if (c == '\n' || c == '|') c = ' ';
    }
    out << "| " << r.prompt_id << " | " << to_string(r.outcome) << (r.unparseable ? " (unparseable)" : "")
        << " | " << (r.swapped ? "yes" : "no") << " | " << verdict << " |\n";
  }
  return out.str();
}

std::string report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "prompt_id,outcome,swapped,unparseable,judge_raw\n";
  for (const auto& r : report.results) {
    out << csv_field(r.prompt_id) << ',' << to_string(r.outcome) << ',' << (r.swapped ? 1 : 0)
        << ',' << (r.unparseable ? 1 : 0) << ',' << csv_field(r.judge_raw) << '\n';
  }
  return out.str();
}

}  // namespace fescale
