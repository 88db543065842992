#pragma once

// Builds the three training datasets (feedback demonstration, edit
// demonstration, edit preference) from raw annotation records, plus the
// reward-model batch layout and descriptive statistics.
//
// Every record or item that does not make it into an output is appended to a
// DropLog with a machine-readable reason.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fescale/backends.hpp"
#include "fescale/core.hpp"

namespace fescale {

enum class Domain { General, Stem, Coding, Multilingual };
std::string_view to_string(Domain domain) noexcept;
std::optional<Domain> domain_from_string(std::string_view s) noexcept;

enum class EditQuality { Good, Bad, Unknown };

struct FeedbackAnnotation {
  std::string annotator_id;
  std::string text;
};

struct EditAnnotation {
  std::string annotator_id;
  std::string edited_text;
  std::string change_summary;
  EditQuality quality = EditQuality::Unknown;
};

struct AnnotationRecord {
  std::string id;
  Conversation conversation;  // ends with the assistant response under review
  std::vector<FeedbackAnnotation> feedback;
  std::vector<EditAnnotation> edits;
  Domain domain = Domain::General;
  std::optional<std::string> language;

  const std::string& response() const { return conversation.last().content; }
};

/// Throws SchemaViolation naming `row_number` (1-based).
AnnotationRecord annotation_from_json(const nlohmann::json& value, std::size_t row_number);
nlohmann::json annotation_to_json(const AnnotationRecord& record);
std::vector<AnnotationRecord> read_annotations_jsonl(std::istream& in);

struct DropEntry {
  std::string stage;
  std::size_t record = 0;
  int item = -1;  // -1 for a whole record
  std::string reason;
};
using DropLog = std::vector<DropEntry>;

// ---------------------------------------------------------------------------
// Annotator agreement

using Triple = std::array<std::size_t, 3>;
using TripleLevels = std::array<HelpfulnessLevel, 3>;

/// Among all 3-subsets of 3..5 ratings, the one with the smallest maximum
/// pairwise gap, then smallest summed gap, then lexicographically first
/// indices. Throws TooFewAnnotators for fewer than three ratings.
Triple select_agreeing_triple(std::span<const HelpfulnessLevel> levels);

enum class GateDecision { Keep, Drop };
/// Drops a triple whose ratings span three or more levels.
GateDecision disagreement_gate(const TripleLevels& levels);

enum class Eligibility { Eligible, CannotImprove, NeedsRewrite };
std::string_view to_string(Eligibility e) noexcept;
/// Majority (2 of 3) perfectly-helpful or not-helpful ratings rule out editing.
Eligibility edit_eligibility(const TripleLevels& levels);

// ---------------------------------------------------------------------------
// Datasets

struct FeedbackDemoRow {
  std::size_t record = 0;
  std::string record_id;
  Domain domain = Domain::General;
  Conversation conversation;
  std::string feedback;
};

std::vector<FeedbackDemoRow> build_feedback_demo(std::span<const AnnotationRecord> records,
                                                 DropLog* drops = nullptr);

struct EditDemoRow {
  std::size_t record = 0;
  std::string record_id;
  Domain domain = Domain::General;
  Conversation conversation;
  std::vector<std::string> feedback;
  std::string target;
};

/// The judge decides, from the good edit's change summary, which feedback the
/// editor acted on. Judge calls fan out over `workers` threads.
std::vector<EditDemoRow> build_edit_demo(std::span<const AnnotationRecord> records,
                                         const ChatBackend& judge, const RetryPolicy& retry,
                                         int workers = 1, DropLog* drops = nullptr);

enum class RejectionKind { BadEdit, NoEdit };
std::string_view to_string(RejectionKind kind) noexcept;

struct PreferencePair {
  std::size_t record = 0;
  std::string record_id;
  Domain domain = Domain::General;
  Conversation conversation;
  std::vector<std::string> feedback;
  std::string chosen;
  std::string rejected;
  RejectionKind kind = RejectionKind::BadEdit;

  /// Identity of the (prompt, response, feedback) tuple the pair belongs to.
  std::string context_key() const;
};

nlohmann::json preference_to_json(const PreferencePair& pair);
PreferencePair preference_from_json(const nlohmann::json& value, std::size_t row_number);

/// Emits (good vs bad edit) and (good vs unchanged response) for every record
/// holding both a good and a bad edit, so the two kinds are always 1:1.
std::vector<PreferencePair> build_edit_preference(std::span<const AnnotationRecord> records,
                                                  DropLog* drops = nullptr);

struct RmBatch {
  std::vector<PreferencePair> pairs;  // (bad_edit, no_edit) per tuple, tuple order
  std::size_t tuples = 0;
};

/// Groups complete tuples `tuples_per_batch` at a time; a trailing partial
/// group becomes a short final batch. Tuples missing a kind are logged as
/// UnpairedTuple and skipped.
std::vector<RmBatch> build_rm_batches(std::span<const PreferencePair> pairs,
                                      std::size_t tuples_per_batch = 32,
                                      DropLog* drops = nullptr);

// ---------------------------------------------------------------------------
// Ingest and statistics

struct IngestDecision {
  bool keep = true;
  std::string reason;  // "too_short", "identity_keyword", "translate_keyword"
};
IngestDecision ingest_filter(std::string_view prompt);

struct StatsRow {
  Domain domain = Domain::General;
  std::vector<double> feedback_chars;
  std::optional<double> original_chars;
  std::optional<double> edited_chars;
};

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
};
Moments moments(std::span<const double> values);

struct StatsGroup {
  std::string name;  // domain name or "overall"
  std::size_t count = 0;
  double percent = 0.0;
  Moments feedback_chars;
  Moments original_chars;
  Moments edited_chars;
  Moments delta_chars;  // edited - original
};

struct StatsTable {
  std::vector<StatsGroup> groups;  // domains present, in enum order, then "overall"
};

StatsTable descriptive_stats(std::span<const StatsRow> rows);
std::vector<StatsRow> stats_rows(std::span<const AnnotationRecord> records);
std::vector<StatsRow> stats_rows(std::span<const FeedbackDemoRow> rows);
std::vector<StatsRow> stats_rows(std::span<const EditDemoRow> rows);
std::vector<StatsRow> stats_rows(std::span<const PreferencePair> pairs);

std::string stats_csv(const StatsTable& table);
std::string stats_markdown(const StatsTable& table);

}  // namespace fescale
