#include <doctest.h>

#include <cctype>
#include <regex>
#include <string>

#include "fescale/core.hpp"
#include "fescale/hashing.hpp"

using namespace fescale;

namespace {

// Independent derivation of the keyword count: lowercase, split on anything
// that is not a letter or digit, then match the five keywords.
int oracle_keywords(const std::string& text) {
  std::string lowered;
  for (char c : text) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const std::regex word("[a-z0-9]+");
  int count = 0;
  for (auto it = std::sregex_iterator(lowered.begin(), lowered.end(), word); it != std::sregex_iterator(); ++it) {
    const std::string w = it->str();
    if (w == "however" || w == "but" || w == "benefit" || w.rfind("improve", 0) == 0 || w.rfind("lack", 0) == 0) {
      ++count;
    }
  }
  return count;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::EmptyInput;
}

}  // namespace

TEST_CASE("helpfulness levels round-trip through labels and ranks") {
  for (auto level : kAllLevels) {
    CHECK(level_from_label(label(level)) == level);
    CHECK(level_from_rank(rank(level)) == level);
  }
  CHECK_FALSE(level_from_label("very").has_value());
  CHECK_FALSE(level_from_rank(5).has_value());
}

TEST_CASE("parse_helpfulness accepts the canonical prefix and its variants") {
  CHECK(parse_helpfulness("The response is mostly helpful. It covers X.") == HelpfulnessLevel::Mostly);
  CHECK(parse_helpfulness("  the response is NOT helpful at all") == HelpfulnessLevel::Not);
  CHECK(parse_helpfulness("The model response is partially helpful.") == HelpfulnessLevel::Partially);
  CHECK(code_of([] { parse_helpfulness("Great answer overall."); }) == ErrorCode::NoHelpfulnessPrefix);
  CHECK(code_of([] { parse_helpfulness("The response is very helpful."); }) == ErrorCode::NoHelpfulnessPrefix);
  CHECK_FALSE(try_parse_helpfulness("").has_value());
}

TEST_CASE("keyword scorer on the published feedback examples") {
  const std::string ex1 =
      "The response is mostly helpful. The response provides a thorough literature review of AI in "
      "patient care optimization, effectively synthesizing relevant studies to highlight key themes. "
      "The citations are correctly formatted, and the content is well-organized. Minor redundancies "
      "exist, but the overall quality and completeness make it a valuable resource for understanding "
      "the current state of AI in healthcare.";
  const std::string ex2 =
      "The response is partially helpful. The response provides a literature review of AI and patient "
      "care optimization. The response uses the proper citation format, and provides a detailed review "
      "of the topic. However, the response is lengthy and could be more concise. The response could "
      "also have more information on the challenges of AI in patient care.";
  const std::string ex3 =
      "The response is mostly helpful. The response provides a comprehensive literature review on AI "
      "and patient care optimization. It covers various aspects such as predictive analytics, "
      "personalized medicine, and challenges in implementation. The response is well-structured and "
      "easy to follow. However, some of the references are not directly related to patient care "
      "optimization.";
  // Derived by hand: "but" in 1, "However" in 2 and 3; no other keyword tokens.
  CHECK(oracle_keywords(ex1) == 1);
  CHECK(oracle_keywords(ex2) == 1);
  CHECK(oracle_keywords(ex3) == 1);
  CHECK(count_constructive_keywords(ex1) == oracle_keywords(ex1));
  CHECK(count_constructive_keywords(ex2) == oracle_keywords(ex2));
  CHECK(count_constructive_keywords(ex3) == oracle_keywords(ex3));
}

TEST_CASE("keyword scorer token boundaries") {
  CHECK(count_constructive_keywords("It lacks depth and could improve; improvements help.") == 3);
  CHECK(count_constructive_keywords("butter, benefits, blacklist") == 0);
  CHECK(count_constructive_keywords("BUT however-Benefit") == 3);
  CHECK(count_constructive_keywords("") == 0);
}

TEST_CASE("keyword scorer agrees with the regex oracle on generated text") {
  const char* words[] = {"however", "But", "benefit", "improved", "lacking", "butter", "improv",
                         "lack", "fine", "good", "HOWEVER,", "x-but", "benefits", "1lack"};
  std::uint64_t state = 42;
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    for (int w = 0; w < 12; ++w) {
      state = mix64(state + 1);
      text += words[state % std::size(words)];
      text += (state >> 8) % 3 == 0 ? ". " : " ";
    }
    REQUIRE(count_constructive_keywords(text) == oracle_keywords(text));
  }
}

TEST_CASE("conversation invariants") {
  CHECK(code_of([] { Conversation(std::vector<Turn>{}); }) == ErrorCode::InvalidConversation);
  CHECK(code_of([] { Conversation({{Role::Assistant, "hi"}}); }) == ErrorCode::InvalidConversation);
  CHECK(code_of([] { Conversation({{Role::User, "a"}, {Role::User, "b"}}); }) ==
        ErrorCode::InvalidConversation);

  const auto c = Conversation::single_prompt("Hello").with_turn(Role::Assistant, "Hi there");
  CHECK(c.last_role() == Role::Assistant);
  CHECK(c.without_last() == Conversation::single_prompt("Hello"));
  CHECK(render_transcript(c) == "User: Hello\n\nAssistant: Hi there");
  CHECK(code_of([&] { (void)c.with_turn(Role::Assistant, "again"); }) == ErrorCode::InvalidConversation);
}

TEST_CASE("sampling params validation") {
  CHECK_NOTHROW(SamplingParams{}.validate());
  CHECK_NOTHROW(SamplingParams::greedy(16).validate());
  CHECK(code_of([] { SamplingParams{0.0, 0.9, 10, 2}.validate(); }) == ErrorCode::InvalidSamplingParams);
  CHECK(code_of([] { SamplingParams{-0.1, 0.9, 10, 1}.validate(); }) == ErrorCode::InvalidSamplingParams);
  CHECK(code_of([] { SamplingParams{0.7, 0.0, 10, 1}.validate(); }) == ErrorCode::InvalidSamplingParams);
  CHECK(code_of([] { SamplingParams{0.7, 0.9, 0, 1}.validate(); }) == ErrorCode::InvalidSamplingParams);
}

TEST_CASE("feedback sets hold one to three non-perfect items") {
  const auto fb = [](HelpfulnessLevel level) {
    return Feedback::from_text(helpfulness_prefix(level) + " However, it is short.", 0, 0.7);
  };
  CHECK(fb(HelpfulnessLevel::Partially).keyword_score == 1);
  CHECK_NOTHROW(FeedbackSet({fb(HelpfulnessLevel::Not)}));
  CHECK_NOTHROW(FeedbackSet({fb(HelpfulnessLevel::Not), fb(HelpfulnessLevel::Mostly), fb(HelpfulnessLevel::Slightly)}));
  CHECK(code_of([] { FeedbackSet({}); }) == ErrorCode::InvalidFeedbackSet);
  CHECK(code_of([&] { FeedbackSet({fb(HelpfulnessLevel::Perfectly)}); }) == ErrorCode::InvalidFeedbackSet);
  CHECK(code_of([&] {
          FeedbackSet({fb(HelpfulnessLevel::Not), fb(HelpfulnessLevel::Not), fb(HelpfulnessLevel::Not),
                       fb(HelpfulnessLevel::Not)});
        }) == ErrorCode::InvalidFeedbackSet);
}

TEST_CASE("derived seeds are stable and distinct") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(to_hex(0xabcULL) == "0000000000000abc");
}
