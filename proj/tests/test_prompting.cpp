#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fescale/prompting.hpp"

using namespace fescale;

namespace {

// Set FESCALE_UPDATE_GOLDENS=1 to rewrite the files from the current renderer.
void check_golden(const std::string& name, const std::string& rendered) {
  const std::string path = std::string(FESCALE_GOLDEN_DIR) + "/" + name;
  if (std::getenv("FESCALE_UPDATE_GOLDENS")) {
    std::ofstream(path, std::ios::binary) << rendered;
  }
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing golden " << path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  CHECK_MESSAGE(buffer.str() == rendered, "golden mismatch: " << name);
}

Conversation sample_conversation() {
  return Conversation({{Role::User, "Write a short poem about the sea."},
                       {Role::Assistant, "Waves fold over waves,\nsalt wind carries gull song home."}});
}

Feedback fb(const std::string& text) { return Feedback::from_text(text, 0, 0.7); }

}  // namespace

TEST_CASE("feedback generation golden") {
  check_golden("feedback_generation.txt", render_feedback_prompt(sample_conversation()));
}

TEST_CASE("edit generation goldens") {
  const FeedbackSet set({fb("The response is partially helpful. It lacks a title."),
                         fb("The response is mostly helpful. However, the second line is long."),
                         fb("The response is slightly helpful. It could improve the imagery.")});
  check_golden("edit_generation.txt", render_edit_prompt(sample_conversation(), set));
  check_golden("edit_generation_none.txt", render_edit_prompt(sample_conversation(), std::nullopt));
  check_golden("edit_without_feedback.txt", render_edit_without_feedback_prompt(sample_conversation()));
}

TEST_CASE("annotation helper goldens") {
  check_golden("feedback_application.txt",
               render_judge_prompt("Added a title and shortened line two.",
                                   "The response is partially helpful. It lacks a title."));
  const std::string prompt = "Translate this Python function into idiomatic Rust.";
  check_golden("programming_language.txt", render_programming_language_prompt(prompt));
  check_golden("natural_language.txt", render_natural_language_prompt(prompt));
  check_golden("complexity.txt", render_complexity_prompt(prompt));
}

TEST_CASE("templates keep the published wording") {
  const auto feedback = render_feedback_prompt(sample_conversation());
  CHECK(feedback.starts_with("User: Write a short poem about the sea.\n\nAssistant: Waves fold"));
  CHECK(feedback.ends_with("Then provide a brief explanation of the evaluation in 2 to 10 sentences."));
  const auto none = render_edit_prompt(sample_conversation(), std::nullopt);
  CHECK(none.ends_with("based on the following feedback:\n\n<None>"));
}

TEST_CASE("rendering preconditions") {
  const auto open = Conversation::single_prompt("Hi");
  try {
    render_feedback_prompt(open);
    FAIL("expected LastTurnNotAssistant");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LastTurnNotAssistant);
  }
  CHECK_THROWS_AS(render_edit_prompt(open, std::nullopt), Error);
  CHECK_THROWS_AS(render_judge_prompt("", "x"), Error);
  CHECK_THROWS_AS(render_judge_prompt("x", ""), Error);
}

TEST_CASE("reply parsers") {
  CHECK(parse_yes_no("Yes"));
  CHECK(parse_yes_no("  yes, it does"));
  CHECK_FALSE(parse_yes_no("No."));
  CHECK_THROWS_AS(parse_yes_no("Maybe"), Error);
  CHECK_THROWS_AS(parse_yes_no(""), Error);

  CHECK(parse_complexity("[4]") == 4);
  CHECK(parse_complexity("Score: 2") == 2);
  CHECK_THROWS_AS(parse_complexity("7"), Error);
  CHECK_THROWS_AS(parse_complexity("none"), Error);

  CHECK(parse_language("Python") == "python");
  CHECK(parse_language("C++.") == "c++");
  CHECK(parse_language(" None.") == std::nullopt);
  CHECK(parse_language("") == std::nullopt);
}

TEST_CASE("pairwise judge prompt lists both responses in order") {
  const auto p = render_pairwise_judge_prompt(Conversation::single_prompt("Q?"), "first", "second");
  CHECK(p.find("[Assistant A]\nfirst") < p.find("[Assistant B]\nsecond"));
  CHECK(p.starts_with(templates::kPairwiseJudgeHeader));
}
