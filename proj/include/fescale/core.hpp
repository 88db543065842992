#pragma once

// Domain types shared by every stage of the feedback-edit-select engine.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fescale/error.hpp"

namespace fescale {

/// Five-point ordinal helpfulness scale embedded in every feedback opening.
enum class HelpfulnessLevel : int {
  Not = 0,
  Slightly = 1,
  Partially = 2,
  Mostly = 3,
  Perfectly = 4,
};

inline constexpr std::array<HelpfulnessLevel, 5> kAllLevels = {
    HelpfulnessLevel::Not, HelpfulnessLevel::Slightly, HelpfulnessLevel::Partially,
    HelpfulnessLevel::Mostly, HelpfulnessLevel::Perfectly};

constexpr int rank(HelpfulnessLevel level) noexcept { return static_cast<int>(level); }
std::string_view label(HelpfulnessLevel level) noexcept;
std::optional<HelpfulnessLevel> level_from_label(std::string_view label) noexcept;
std::optional<HelpfulnessLevel> level_from_rank(int rank) noexcept;

enum class Role { User, Assistant };

std::string_view to_string(Role role) noexcept;
std::optional<Role> role_from_string(std::string_view s) noexcept;

struct Turn {
  Role role;
  std::string content;

  bool operator==(const Turn&) const = default;
};

/// Alternating user/assistant turns, starting with the user.
class Conversation {
 public:
  Conversation() = default;
  /// Throws InvalidConversation unless turns are non-empty, alternate, and start with user.
  explicit Conversation(std::vector<Turn> turns);

  static Conversation single_prompt(std::string user_text);

  const std::vector<Turn>& turns() const noexcept { return turns_; }
  bool empty() const noexcept { return turns_.empty(); }
  Role last_role() const;
  const Turn& last() const;

  /// Returns a copy with one more turn appended; throws if roles would not alternate.
  Conversation with_turn(Role role, std::string content) const;
  /// Drops the last turn (the response under evaluation).
  Conversation without_last() const;

  bool operator==(const Conversation&) const = default;

 private:
  std::vector<Turn> turns_;
};

/// "User: ...\n\nAssistant: ..." flattening used wherever a template says [Entire Conversation].
std::string render_transcript(const Conversation& conversation);

struct SamplingParams {
  double temperature = 0.7;
  double top_p = 0.9;
  int max_tokens = 2048;
  int n = 1;

  static SamplingParams greedy(int max_tokens, double top_p = 0.9);

  /// Throws InvalidSamplingParams when a field is out of range or temperature 0 asks for n > 1.
  void validate() const;
  bool operator==(const SamplingParams&) const = default;
};

struct Feedback {
  std::string raw_text;
  HelpfulnessLevel level = HelpfulnessLevel::Not;
  int keyword_score = 0;
  int sample_index = 0;
  double temperature = 0.0;

  /// Parses level and keyword score from the text; throws NoHelpfulnessPrefix.
  static Feedback from_text(std::string raw_text, int sample_index, double temperature);
};

/// Ordered group of one to three non-perfect feedback conditioning a single edit.
class FeedbackSet {
 public:
  /// Throws InvalidFeedbackSet on size outside [1,3] or any perfectly-helpful item.
  explicit FeedbackSet(std::vector<Feedback> items);

  const std::vector<Feedback>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }

 private:
  std::vector<Feedback> items_;
};

struct InitialProvenance {
  int sample_index = 0;
  bool operator==(const InitialProvenance&) const = default;
};

struct EditedProvenance {
  int parent_response_index = 0;
  int feedback_set_index = 0;
  int edit_sample_index = 0;
  bool operator==(const EditedProvenance&) const = default;
};

using Provenance = std::variant<InitialProvenance, EditedProvenance>;

struct Candidate {
  std::string text;
  Provenance provenance;
  std::optional<double> reward;
};

HelpfulnessLevel parse_helpfulness(std::string_view raw_text);
std::optional<HelpfulnessLevel> try_parse_helpfulness(std::string_view raw_text) noexcept;

/// Counts "however"/"but"/"benefit" tokens and tokens starting with "improve"/"lack".
int count_constructive_keywords(std::string_view raw_text);

/// The canonical opening sentence for a level, e.g. "The response is mostly helpful."
std::string helpfulness_prefix(HelpfulnessLevel level);

}  // namespace fescale
