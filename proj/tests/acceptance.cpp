// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "fescale/backends.hpp"
#include "fescale/cli.hpp"
#include "fescale/dataset_prep.hpp"
#include "fescale/eval.hpp"
#include "fescale/pipeline.hpp"
#include "fescale/prompting.hpp"

using namespace fescale;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const Conversation kPrompt = Conversation::single_prompt("Describe the water cycle for a ten-year-old.");

MockOptions valid_feedback(std::uint64_t seed = 0) {
  MockOptions o;
  o.seed = seed;
  o.feedback.perfectly_rate = 0.0;
  o.feedback.keyword_rate = 1.0;
  return o;
}

Check ladder_conformance() {
  const auto start = std::chrono::steady_clock::now();
  MockBackend mock(valid_feedback());
  const std::map<int, std::map<double, int>> expected = {
      {10, {{0.7, 10}}},
      {16, {{0.7, 16}}},
      {32, {{0.7, 16}, {0.6, 16}}},
      {64, {{0.5, 16}, {0.6, 16}, {0.7, 16}, {0.8, 16}}}};
  for (const auto& [raw, temps] : expected) {
    ScalingConfig c;
    c.raw_feedback = raw;
    c.feedback_mode = raw == 10 ? FeedbackMode::BaselineRandom : FeedbackMode::RankedEffective;
    const auto trace = run_pipeline(kPrompt, c, Backends(mock, mock)).trace;
    std::map<double, int> seen;
    for (const auto& call : trace.calls) {
      if (call.stage == Stage::Feedback) seen[call.temperature] += static_cast<int>(call.outputs.size());
    }
    if (seen != temps) return {false, "F_raw=" + std::to_string(raw) + " schedule differs"};
  }
  const double s = seconds_since(start);
  return {s < 1.0, "4 budgets, " + std::to_string(s) + " s"};
}

Check filter_guarantee() {
  std::mt19937_64 rng(7);
  const char* tails[] = {" It is accurate.", " However, it is brief.", " It lacks sources.", " Well organised.",
                         " It would benefit from examples.", " Correct, but dense.", " Could improve flow.",
                         " Clear and complete."};
  int violations = 0;
  int survivors = 0;
  for (int batch = 0; batch < 100; ++batch) {
    std::vector<Feedback> fb;
    for (int i = 0; i < 10; ++i) {
      std::string text = helpfulness_prefix(kAllLevels[rng() % 5]);
      for (int s = static_cast<int>(rng() % 4); s > 0; --s) text += tails[rng() % std::size(tails)];
      fb.push_back(Feedback::from_text(text, i, 0.7));
    }
    for (auto mode : {FeedbackMode::BaselineRandom, FeedbackMode::RankedEffective}) {
      ScalingConfig c;
      c.feedback_mode = mode;
      c.seed = static_cast<std::uint64_t>(batch);
      try {
        for (const auto& set : select_effective_feedback(fb, c)) {
          for (const auto& f : set.items()) {
            ++survivors;
            violations += f.level == HelpfulnessLevel::Perfectly;
            violations += mode == FeedbackMode::RankedEffective && f.keyword_score == 0;
          }
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoEffectiveFeedback) throw;
      }
    }
  }
  return {violations == 0, "1000 texts, " + std::to_string(survivors) + " survivors, " +
                               std::to_string(violations) + " violations"};
}

Check call_accounting() {
  MockBackend mock(valid_feedback());
  ScalingConfig c;
  c.responses = 8;
  c.raw_feedback = 64;
  c.effective_feedback = 16;
  c.edits = 1;
  c.feedback_mode = FeedbackMode::RankedEffective;
  const auto acc = account(run_pipeline(kPrompt, c, Backends(mock, mock)).trace);
  const auto i = acc.at(Stage::Initial).samples, f = acc.at(Stage::Feedback).samples,
             e = acc.at(Stage::Edit).samples, s = acc.at(Stage::Select).samples;
  char buf[96];
  std::snprintf(buf, sizeof buf, "initial=%lld feedback=%lld edits=%lld scores=%lld", static_cast<long long>(i),
                static_cast<long long>(f), static_cast<long long>(e), static_cast<long long>(s));
  return {i == 8 && f == 512 && e == 48 && s == 48, buf};
}

Check selection_oracle() {
  int mismatches = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    MockOptions o = valid_feedback(trial);
    o.reward = MockReward::Length;
    MockBackend mock(o);
    ScalingConfig c;
    c.seed = trial;
    c.responses = 2;
    for (const auto& r : {run_best_of_n(kPrompt, 16, c, Backends(mock, mock)),
                          run_pipeline(kPrompt, c, Backends(mock, mock))}) {
      const auto longest = std::max_element(r.trace.pool.begin(), r.trace.pool.end(),
                                            [](const Candidate& a, const Candidate& b) {
                                              return a.text.size() < b.text.size();
                                            });
      mismatches += r.winner.text.size() != longest->text.size();
    }
  }
  return {mismatches == 0, "200 runs, " + std::to_string(mismatches) + " mismatches"};
}

Check triple_oracle() {
  std::mt19937_64 rng(99);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 3 + rng() % 3;
    std::vector<HelpfulnessLevel> levels;
    std::vector<int> v;
    for (std::size_t i = 0; i < k; ++i) {
      v.push_back(static_cast<int>(rng() % 5));
      levels.push_back(*level_from_rank(v.back()));
    }
    std::tuple<int, int, Triple> best{99, 99, {}};
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a + 1; b < k; ++b)
        for (std::size_t c = b + 1; c < k; ++c) {
          const int g1 = std::abs(v[a] - v[b]), g2 = std::abs(v[a] - v[c]), g3 = std::abs(v[b] - v[c]);
          best = std::min(best, std::tuple<int, int, Triple>{std::max({g1, g2, g3}), g1 + g2 + g3, {a, b, c}});
        }
    mismatches += select_agreeing_triple(levels) != std::get<2>(best);
  }
  return {mismatches == 0, "1000 vectors, " + std::to_string(mismatches) + " mismatches"};
}

class MarkerJudge final : public ChatBackend {
 public:
  std::string name() const override { return "marker-judge"; }
  ChatResult complete_once(const ChatRequest& r) const override {
    return {{r.conversation.last().content.find("SKIP") == std::string::npos ? "Yes" : "No"}, {}};
  }
};

Check permutation_augmentation() {
  MarkerJudge judge;
  std::string detail;
  for (std::size_t k = 1; k <= 3; ++k) {
    AnnotationRecord rec;
    rec.id = "k" + std::to_string(k);
    rec.conversation = Conversation({{Role::User, "Q"}, {Role::Assistant, "A"}});
    for (std::size_t i = 0; i < 3; ++i) {
      std::string text = "The response is mostly helpful. However, point " + std::to_string(i) + ".";
      if (i >= k) text += " SKIP";
      rec.feedback.push_back({"a" + std::to_string(i), text});
    }
    rec.edits.push_back({"e", "A, improved.", "Addressed the points.", EditQuality::Good});
    const auto rows = build_edit_demo(std::vector{rec}, judge, {}, 2);
    const std::size_t expected = k == 3 ? 6 : k;
    std::set<std::vector<std::string>> orders;
    std::set<std::string> targets;
    for (const auto& r : rows) {
      orders.insert(r.feedback);
      targets.insert(r.target);
    }
    if (rows.size() != expected || orders.size() != expected || targets.size() != 1) {
      return {false, "k=" + std::to_string(k) + " produced " + std::to_string(rows.size()) + " rows"};
    }
    detail += (detail.empty() ? "" : ", ") + ("k=" + std::to_string(k) + ":" + std::to_string(rows.size()));
  }
  return {true, detail};
}

Check batch_composition() {
  std::vector<AnnotationRecord> records;
  for (int i = 0; i < 64; ++i) {
    AnnotationRecord rec;
    rec.id = "t" + std::to_string(i);
    rec.conversation = Conversation({{Role::User, "Q" + rec.id}, {Role::Assistant, "A" + rec.id}});
    for (int j = 0; j < 3; ++j) {
      rec.feedback.push_back({"a", "The response is partially helpful. However, item " + std::to_string(j) + "."});
    }
    rec.edits.push_back({"e1", "Good " + rec.id, "Applied feedback.", EditQuality::Good});
    rec.edits.push_back({"e2", "Bad " + rec.id, "Own ideas.", EditQuality::Bad});
    records.push_back(std::move(rec));
  }
  const auto batches = build_rm_batches(build_edit_preference(records), 32);
  bool ok = batches.size() == 2;
  for (const auto& b : batches) {
    const auto bad = std::count_if(b.pairs.begin(), b.pairs.end(),
                                   [](const PreferencePair& p) { return p.kind == RejectionKind::BadEdit; });
    ok = ok && b.tuples == 32 && b.pairs.size() == 64 && bad == 32;
  }
  return {ok, std::to_string(batches.size()) + " batches"};
}

Check template_goldens() {
  const std::string dir = FESCALE_GOLDEN_DIR;
  const Conversation conv({{Role::User, "Write a short poem about the sea."},
                           {Role::Assistant, "Waves fold over waves,\nsalt wind carries gull song home."}});
  const auto fb = [](const char* t) { return Feedback::from_text(t, 0, 0.7); };
  const FeedbackSet set({fb("The response is partially helpful. It lacks a title."),
                         fb("The response is mostly helpful. However, the second line is long."),
                         fb("The response is slightly helpful. It could improve the imagery.")});
  const std::string prompt = "Translate this Python function into idiomatic Rust.";
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"feedback_generation.txt", render_feedback_prompt(conv)},
      {"edit_generation.txt", render_edit_prompt(conv, set)},
      {"edit_generation_none.txt", render_edit_prompt(conv, std::nullopt)},
      {"edit_without_feedback.txt", render_edit_without_feedback_prompt(conv)},
      {"feedback_application.txt", render_judge_prompt("Added a title and shortened line two.",
                                                       "The response is partially helpful. It lacks a title.")},
      {"programming_language.txt", render_programming_language_prompt(prompt)},
      {"natural_language.txt", render_natural_language_prompt(prompt)},
      {"complexity.txt", render_complexity_prompt(prompt)}};
  for (const auto& [name, rendered] : cases) {
    std::ifstream in(dir + "/" + name, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    if (!in.good() && buf.str().empty()) return {false, "missing " + name};
    if (buf.str() != rendered) return {false, name + " differs"};
  }
  return {true, std::to_string(cases.size()) + " goldens (7 templates + <None>)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Check determinism() {
  const fs::path dir = fs::temp_directory_path() / ("fescale_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "prompts.jsonl");
    for (int i = 0; i < 20; ++i) {
      out << nlohmann::json{{"prompt_id", "q" + std::to_string(i)},
                            {"prompt", "Give three facts about topic " + std::to_string(i) + "."}}
                 .dump()
          << '\n';
    }
  }
  const auto start = std::chrono::steady_clock::now();
  std::ostringstream sink;
  for (const char* workers : {"1", "8"}) {
    const int code = cli::run_cli({"fescale", "run", (dir / "prompts.jsonl").string(), "--mock", "--seed", "1234",
                                   "--workers", workers, "--responses", "4", "--raw-feedback", "16",
                                   "--feedback-mode", "ranked_effective", "--out-dir",
                                   (dir / (std::string("w") + workers)).string()},
                                  sink, sink);
    if (code != 0) return {false, "run exited " + std::to_string(code) + ": " + sink.str()};
  }
  const double s = seconds_since(start);
  const bool same = slurp(dir / "w1/responses.jsonl") == slurp(dir / "w8/responses.jsonl") &&
                    slurp(dir / "w1/trace.jsonl") == slurp(dir / "w8/trace.jsonl");
  fs::remove_all(dir);
  return {same && s < 30.0, std::string(same ? "identical" : "DIFFERENT") + ", " + std::to_string(s) + " s"};
}

Check bootstrap_coverage() {
  const auto start = std::chrono::steady_clock::now();
  constexpr double kTruth = 0.7;
  int covered = 0;
  for (int d = 0; d < 1000; ++d) {
    // Monte-Carlo oracle: datasets drawn from a known win probability.
    std::mt19937_64 rng(5000 + static_cast<std::uint64_t>(d));
    std::bernoulli_distribution win(kTruth);
    std::vector<MatchResult> results(200);
    for (auto& r : results) r.outcome = win(rng) ? Outcome::Win : Outcome::Loss;
    const auto ci = bootstrap_ci(results, 0.95, 1000, static_cast<std::uint64_t>(d), 4);
    covered += ci.low <= kTruth && kTruth <= ci.high;
  }
  const double coverage = covered / 1000.0;
  const double s = seconds_since(start);
  char buf[64];
  std::snprintf(buf, sizeof buf, "coverage %.3f, %.1f s", coverage, s);
  return {coverage >= 0.92 && coverage <= 0.98 && s < 60.0, buf};
}

Check keyword_scorer() {
  const std::vector<std::string> texts = {
      "The response is mostly helpful. The response provides a thorough literature review of AI in patient care "
      "optimization, effectively synthesizing relevant studies to highlight key themes. The citations are correctly "
      "formatted, and the content is well-organized. Minor redundancies exist, but the overall quality and "
      "completeness make it a valuable resource for understanding the current state of AI in healthcare.",
      "The response is partially helpful. The response provides a literature review of AI and patient care "
      "optimization. The response uses the proper citation format, and provides a detailed review of the topic. "
      "However, the response is lengthy and could be more concise. The response could also have more information "
      "on the challenges of AI in patient care.",
      "The response is mostly helpful. The response provides a comprehensive literature review on AI and patient "
      "care optimization. It covers various aspects such as predictive analytics, personalized medicine, and "
      "challenges in implementation. The response is well-structured and easy to follow. However, some of the "
      "references are not directly related to patient care optimization."};
  // Hand derivation: "but" (1), "However" (2), "However" (3); no improve*/lack*/benefit tokens.
  const std::vector<int> derived = {1, 1, 1};
  std::string detail;
  bool ok = true;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const int got = count_constructive_keywords(texts[i]);
    ok = ok && got == derived[i];
    detail += (i ? ", " : "") + std::to_string(got);
  }
  return {ok, "scores " + detail};
}

Check parallel_depth() {
  MockBackend mock(valid_feedback());
  ScalingConfig c;
  c.responses = 4;
  const int full = account(run_pipeline(kPrompt, c, Backends(mock, mock)).trace).parallel_depth;
  const int bon = account(run_best_of_n(kPrompt, 16, c, Backends(mock, mock)).trace).parallel_depth;
  return {full == 4 && bon == 2, "pipeline " + std::to_string(full) + ", best-of-n " + std::to_string(bon)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"ladder conformance", ladder_conformance},
      {"filter guarantee", filter_guarantee},
      {"call accounting", call_accounting},
      {"selection oracle", selection_oracle},
      {"triple-selection oracle", triple_oracle},
      {"permutation augmentation", permutation_augmentation},
      {"batch composition", batch_composition},
      {"template goldens", template_goldens},
      {"determinism", determinism},
      {"bootstrap coverage", bootstrap_coverage},
      {"keyword scorer", keyword_scorer},
      {"parallel depth", parallel_depth},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check result;
    try {
      result = criteria[i].second();
    } catch (const std::exception& e) {
      result = {false, std::string("threw: ") + e.what()};
    }
    failed += !result.ok;
    std::printf("%s %2zu %-26s %s\n", result.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                result.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
