#include "fescale/dataset_prep.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>

#include "fescale/hashing.hpp"
#include "fescale/jsonio.hpp"
#include "fescale/parallel.hpp"
#include "fescale/prompting.hpp"

namespace fescale {

using nlohmann::json;

std::string_view to_string(Domain domain) noexcept {
  switch (domain) {
    case Domain::General: return "general";
    case Domain::Stem: return "stem";
    case Domain::Coding: return "coding";
    case Domain::Multilingual: return "multilingual";
  }
  return "general";
}

std::optional<Domain> domain_from_string(std::string_view s) noexcept {
  for (Domain d : {Domain::General, Domain::Stem, Domain::Coding, Domain::Multilingual}) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

std::string_view to_string(Eligibility e) noexcept {
  switch (e) {
    case Eligibility::Eligible: return "eligible";
    case Eligibility::CannotImprove: return "cannot_improve";
    case Eligibility::NeedsRewrite: return "needs_rewrite";
  }
  return "eligible";
}

std::string_view to_string(RejectionKind kind) noexcept {
  return kind == RejectionKind::BadEdit ? "bad_edit" : "no_edit";
}

// ---------------------------------------------------------------------------
// Records

namespace {

std::string required_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    throw Error(ErrorCode::SchemaViolation, where + ": \"" + key + "\" must be a string");
  }
  return obj[key].get<std::string>();
}

EditQuality quality_from_string(const std::string& s, const std::string& where) {
  if (s == "good") return EditQuality::Good;
  if (s == "bad") return EditQuality::Bad;
  if (s == "unknown") return EditQuality::Unknown;
  throw Error(ErrorCode::SchemaViolation, where + ": quality must be good, bad or unknown");
}

std::string_view quality_string(EditQuality q) {
  return q == EditQuality::Good ? "good" : q == EditQuality::Bad ? "bad" : "unknown";
}

}  // namespace

AnnotationRecord annotation_from_json(const json& value, std::size_t row_number) {
  const std::string where = "row " + std::to_string(row_number);
  if (!value.is_object()) throw Error(ErrorCode::SchemaViolation, where + ": not an object");
  AnnotationRecord rec;
  rec.id = value.contains("id") && value["id"].is_string() ? value["id"].get<std::string>()
                                                          : std::to_string(row_number);
  if (!value.contains("conversation")) {
    throw Error(ErrorCode::SchemaViolation, where + ": missing conversation");
  }
  try {
    rec.conversation = conversation_from_json(value["conversation"]);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaViolation, where + ": " + e.what());
  }
  if (rec.conversation.last_role() != Role::Assistant) {
    throw Error(ErrorCode::SchemaViolation, where + ": conversation must end with the response");
  }

  const json feedback = value.value("feedback", json::array());
  if (!feedback.is_array()) throw Error(ErrorCode::SchemaViolation, where + ": feedback must be an array");
  for (const auto& item : feedback) {
    if (!item.is_object()) throw Error(ErrorCode::SchemaViolation, where + ": feedback item not an object");
    rec.feedback.push_back(FeedbackAnnotation{item.value("annotator_id", std::string()),
                                              required_string(item, "text", where)});
  }

  const json edits = value.value("edits", json::array());
  if (!edits.is_array()) throw Error(ErrorCode::SchemaViolation, where + ": edits must be an array");
  for (const auto& item : edits) {
    if (!item.is_object()) throw Error(ErrorCode::SchemaViolation, where + ": edit item not an object");
    EditAnnotation edit;
    edit.annotator_id = item.value("annotator_id", std::string());
    edit.edited_text = required_string(item, "edited_text", where);
    edit.change_summary = item.contains("change_summary") && item["change_summary"].is_string()
                              ? item["change_summary"].get<std::string>()
                              : std::string();
    edit.quality = quality_from_string(item.value("quality", std::string("unknown")), where);
    rec.edits.push_back(std::move(edit));
  }

  const std::string domain = value.value("domain", std::string("general"));
  const auto parsed = domain_from_string(domain);
  if (!parsed) throw Error(ErrorCode::SchemaViolation, where + ": unknown domain \"" + domain + "\"");
  rec.domain = *parsed;
  if (value.contains("language") && value["language"].is_string()) {
    rec.language = value["language"].get<std::string>();
  }
  return rec;
}

json annotation_to_json(const AnnotationRecord& record) {
  json feedback = json::array();
  for (const auto& f : record.feedback) {
    feedback.push_back({{"annotator_id", f.annotator_id}, {"text", f.text}});
  }
  json edits = json::array();
  for (const auto& e : record.edits) {
    edits.push_back({{"annotator_id", e.annotator_id},
                     {"edited_text", e.edited_text},
                     {"change_summary", e.change_summary},
                     {"quality", quality_string(e.quality)}});
  }
  json out = {{"id", record.id},
              {"conversation", conversation_to_json(record.conversation)},
              {"feedback", feedback},
              {"edits", edits},
              {"domain", to_string(record.domain)}};
  out["language"] = record.language ? json(*record.language) : json(nullptr);
  return out;
}

std::vector<AnnotationRecord> read_annotations_jsonl(std::istream& in) {
  std::vector<AnnotationRecord> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json value = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) {
      throw Error(ErrorCode::SchemaViolation, "row " + std::to_string(row) + ": not valid JSON");
    }
    out.push_back(annotation_from_json(value, row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Agreement

Triple select_agreeing_triple(std::span<const HelpfulnessLevel> levels) {
  const std::size_t k = levels.size();
  if (k < 3) {
    throw Error(ErrorCode::TooFewAnnotators, "need at least 3 ratings, got " + std::to_string(k));
  }
  Triple best{0, 1, 2};
  int best_max = 0;
  int best_sum = 0;
  bool first = true;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      for (std::size_t l = j + 1; l < k; ++l) {
        const int a = rank(levels[i]);
        const int b = rank(levels[j]);
        const int c = rank(levels[l]);
        const int ab = std::abs(a - b);
        const int ac = std::abs(a - c);
        const int bc = std::abs(b - c);
        const int max_gap = std::max({ab, ac, bc});
        const int sum_gap = ab + ac + bc;
        if (first || max_gap < best_max || (max_gap == best_max && sum_gap < best_sum)) {
          best = {i, j, l};
          best_max = max_gap;
          best_sum = sum_gap;
          first = false;
        }
      }
    }
  }
  return best;
}

GateDecision disagreement_gate(const TripleLevels& levels) {
  const auto [lo, hi] = std::minmax_element(levels.begin(), levels.end(),
                                            [](auto a, auto b) { return rank(a) < rank(b); });
  return rank(*hi) - rank(*lo) >= 3 ? GateDecision::Drop : GateDecision::Keep;
}

Eligibility edit_eligibility(const TripleLevels& levels) {
  const auto perfect = std::count(levels.begin(), levels.end(), HelpfulnessLevel::Perfectly);
  const auto useless = std::count(levels.begin(), levels.end(), HelpfulnessLevel::Not);
  if (perfect >= 2) return Eligibility::CannotImprove;
  if (useless >= 2) return Eligibility::NeedsRewrite;
  return Eligibility::Eligible;
}

// ---------------------------------------------------------------------------
// Datasets

namespace {

struct AgreedTriple {
  Triple feedback_index;  // indices into record.feedback
  TripleLevels levels;
};

void log_drop(DropLog* drops, std::string_view stage, std::size_t record, int item,
              std::string reason) {
  if (drops) drops->push_back(DropEntry{std::string(stage), record, item, std::move(reason)});
}

/// Parses every feedback rating and picks the most agreeing three. Logs and
/// returns nullopt when fewer than three ratings parse.
std::optional<AgreedTriple> agreed_triple(const AnnotationRecord& rec, std::size_t index,
                                          std::string_view stage, DropLog* drops) {
  std::vector<std::size_t> parsed;
  std::vector<HelpfulnessLevel> levels;
  for (std::size_t i = 0; i < rec.feedback.size(); ++i) {
    if (auto level = try_parse_helpfulness(rec.feedback[i].text)) {
      parsed.push_back(i);
      levels.push_back(*level);
    } else {
      log_drop(drops, stage, index, static_cast<int>(i), "no_helpfulness_prefix");
    }
  }
  if (levels.size() < 3) {
    log_drop(drops, stage, index, -1, "too_few_annotators");
    return std::nullopt;
  }
  const Triple local = select_agreeing_triple(levels);
  AgreedTriple out;
  for (std::size_t t = 0; t < 3; ++t) {
    out.feedback_index[t] = parsed[local[t]];
    out.levels[t] = levels[local[t]];
  }
  for (std::size_t p = 0; p < parsed.size(); ++p) {
    if (std::find(local.begin(), local.end(), p) == local.end()) {
      log_drop(drops, stage, index, static_cast<int>(parsed[p]), "outside_agreeing_triple");
    }
  }
  return out;
}

const EditAnnotation* first_edit(const AnnotationRecord& rec, EditQuality quality) {
  for (const auto& e : rec.edits) {
    if (e.quality == quality) return &e;
  }
  return nullptr;
}

}  // namespace

std::vector<FeedbackDemoRow> build_feedback_demo(std::span<const AnnotationRecord> records,
                                                 DropLog* drops) {
  constexpr std::string_view stage = "feedback_demo";
  std::vector<FeedbackDemoRow> rows;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto triple = agreed_triple(rec, r, stage, drops);
    if (!triple) continue;
    if (disagreement_gate(triple->levels) == GateDecision::Drop) {
      log_drop(drops, stage, r, -1, "disagreement");
      continue;
    }
    for (std::size_t idx : triple->feedback_index) {
      rows.push_back(FeedbackDemoRow{r, rec.id, rec.domain, rec.conversation, rec.feedback[idx].text});
    }
  }
  return rows;
}

std::vector<EditDemoRow> build_edit_demo(std::span<const AnnotationRecord> records,
                                         const ChatBackend& judge, const RetryPolicy& retry,
                                         int workers, DropLog* drops) {
  constexpr std::string_view stage = "edit_demo";

  struct Pending {
    std::size_t record;
    const EditAnnotation* good;
    std::vector<std::size_t> feedback;  // candidates for the judge
  };
  std::vector<Pending> pending;

  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto triple = agreed_triple(rec, r, stage, drops);
    if (!triple) continue;
    if (const auto e = edit_eligibility(triple->levels); e != Eligibility::Eligible) {
      log_drop(drops, stage, r, -1, std::string(to_string(e)));
      continue;
    }
    const EditAnnotation* good = first_edit(rec, EditQuality::Good);
    if (good == nullptr) {
      log_drop(drops, stage, r, -1, "no_good_edit");
      continue;
    }
    if (good->change_summary.empty()) {
      log_drop(drops, stage, r, -1, "no_change_summary");
      continue;
    }
    Pending p{r, good, {}};
    for (std::size_t t = 0; t < 3; ++t) {
      const std::size_t idx = triple->feedback_index[t];
      if (triple->levels[t] == HelpfulnessLevel::Perfectly) {
        log_drop(drops, stage, r, static_cast<int>(idx), "perfectly_helpful");
      } else {
        p.feedback.push_back(idx);
      }
    }
    std::sort(p.feedback.begin(), p.feedback.end());
    if (p.feedback.empty()) {
      log_drop(drops, stage, r, -1, "no_usable_feedback");
      continue;
    }
    pending.push_back(std::move(p));
  }

  // One judge request per (record, feedback), fanned out together.
  struct JudgeJob {
    std::size_t pending;
    std::size_t feedback;
  };
  std::vector<JudgeJob> jobs;
  for (std::size_t p = 0; p < pending.size(); ++p) {
    for (std::size_t f : pending[p].feedback) jobs.push_back(JudgeJob{p, f});
  }
  enum class Verdict { Yes, No, Unparseable };
  const auto verdicts = parallel_map(jobs.size(), workers, [&](std::size_t j) {
    const auto& p = pending[jobs[j].pending];
    const auto& rec = records[p.record];
    ChatRequest req;
    req.conversation = Conversation::single_prompt(
        render_judge_prompt(p.good->change_summary, rec.feedback[jobs[j].feedback].text));
    req.params = SamplingParams::greedy(16);
    const ChatResult result = complete(judge, req, retry);
    try {
      return parse_yes_no(result.texts.front()) ? Verdict::Yes : Verdict::No;
    } catch (const Error&) {
      return Verdict::Unparseable;
    }
  });

  std::vector<EditDemoRow> rows;
  std::size_t next = 0;
  for (const auto& p : pending) {
    const auto& rec = records[p.record];
    std::vector<std::string> kept;
    for (std::size_t f : p.feedback) {
      const Verdict v = verdicts[next++];
      if (v == Verdict::Yes) {
        kept.push_back(rec.feedback[f].text);
      } else {
        log_drop(drops, stage, p.record, static_cast<int>(f),
                 v == Verdict::No ? "not_addressed_by_change_summary" : "judge_unparseable");
      }
    }
    if (kept.empty()) {
      log_drop(drops, stage, p.record, -1, "no_usable_feedback");
      continue;
    }
    std::vector<std::size_t> order(kept.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    do {
      EditDemoRow row{p.record, rec.id, rec.domain, rec.conversation, {}, p.good->edited_text};
      for (std::size_t i : order) row.feedback.push_back(kept[i]);
      rows.push_back(std::move(row));
    } while (std::next_permutation(order.begin(), order.end()));
  }
  return rows;
}

std::string PreferencePair::context_key() const {
  std::uint64_t h = fnv1a64(render_transcript(conversation));
  for (const auto& f : feedback) {
    h = fnv1a64("\x1e", h);
    h = fnv1a64(f, h);
  }
  return to_hex(h);
}

json preference_to_json(const PreferencePair& pair) {
  return {{"record", pair.record},
          {"record_id", pair.record_id},
          {"domain", to_string(pair.domain)},
          {"conversation", conversation_to_json(pair.conversation)},
          {"feedback", pair.feedback},
          {"chosen", pair.chosen},
          {"rejected", pair.rejected},
          {"rejection_kind", to_string(pair.kind)}};
}

PreferencePair preference_from_json(const json& value, std::size_t row_number) {
  const std::string where = "row " + std::to_string(row_number);
  if (!value.is_object()) throw Error(ErrorCode::SchemaViolation, where + ": not an object");
  PreferencePair pair;
  try {
    pair.record = value.value("record", std::size_t{0});
    pair.record_id = value.value("record_id", std::string());
    const auto domain = domain_from_string(value.value("domain", std::string("general")));
    if (!domain) throw Error(ErrorCode::SchemaViolation, "unknown domain");
    pair.domain = *domain;
    pair.conversation = conversation_from_json(value.at("conversation"));
    pair.feedback = value.value("feedback", std::vector<std::string>{});
    pair.chosen = required_string(value, "chosen", where);
    pair.rejected = required_string(value, "rejected", where);
    const std::string kind = required_string(value, "rejection_kind", where);
    if (kind == "bad_edit") {
      pair.kind = RejectionKind::BadEdit;
    } else if (kind == "no_edit") {
      pair.kind = RejectionKind::NoEdit;
    } else {
      throw Error(ErrorCode::SchemaViolation, "rejection_kind must be bad_edit or no_edit");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, where + ": " + e.what());
  } catch (const Error& e) {
    if (std::string_view(e.what()).find(where) != std::string_view::npos) throw;
    throw Error(ErrorCode::SchemaViolation, where + ": " + e.what());
  }
  return pair;
}

std::vector<PreferencePair> build_edit_preference(std::span<const AnnotationRecord> records,
                                                  DropLog* drops) {
  constexpr std::string_view stage = "edit_preference";
  std::vector<PreferencePair> pairs;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const EditAnnotation* good = first_edit(rec, EditQuality::Good);
    const EditAnnotation* bad = first_edit(rec, EditQuality::Bad);
    if (good == nullptr) {
      log_drop(drops, stage, r, -1, "no_good_edit");
      continue;
    }
    if (bad == nullptr) {
      log_drop(drops, stage, r, -1, "no_bad_edit");
      continue;
    }
    if (bad->edited_text == good->edited_text) {
      log_drop(drops, stage, r, -1, "bad_edit_equals_good_edit");
      continue;
    }
    if (good->edited_text == rec.response()) {
      log_drop(drops, stage, r, -1, "good_edit_equals_response");
      continue;
    }

    // Context feedback: the agreeing triple when one exists, minus perfectly-helpful.
    std::vector<std::size_t> indices;
    if (const auto triple = agreed_triple(rec, r, stage, nullptr)) {
      indices.assign(triple->feedback_index.begin(), triple->feedback_index.end());
      std::sort(indices.begin(), indices.end());
    } else {
      for (std::size_t i = 0; i < rec.feedback.size(); ++i) indices.push_back(i);
    }
    std::vector<std::string> feedback;
    for (std::size_t i : indices) {
      const auto level = try_parse_helpfulness(rec.feedback[i].text);
      if (level && *level == HelpfulnessLevel::Perfectly) continue;
      feedback.push_back(rec.feedback[i].text);
    }

    PreferencePair base{r, rec.id, rec.domain, rec.conversation, feedback, good->edited_text, {},
                        RejectionKind::BadEdit};
    PreferencePair vs_bad = base;
    vs_bad.rejected = bad->edited_text;
    PreferencePair vs_none = base;
    vs_none.rejected = rec.response();
    vs_none.kind = RejectionKind::NoEdit;
    pairs.push_back(std::move(vs_bad));
    pairs.push_back(std::move(vs_none));
  }
  return pairs;
}

std::vector<RmBatch> build_rm_batches(std::span<const PreferencePair> pairs,
                                      std::size_t tuples_per_batch, DropLog* drops) {
  constexpr std::string_view stage = "rm_batches";
  if (tuples_per_batch == 0) throw Error(ErrorCode::ConfigInvalid, "tuples_per_batch must be > 0");

  struct Tuple {
    const PreferencePair* bad = nullptr;
    const PreferencePair* none = nullptr;
  };
  std::vector<std::string> order;
  std::map<std::string, Tuple> tuples;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    const std::string key = pair.context_key();
    auto [it, inserted] = tuples.try_emplace(key);
    if (inserted) order.push_back(key);
    const PreferencePair*& slot = pair.kind == RejectionKind::BadEdit ? it->second.bad : it->second.none;
    if (slot != nullptr) {
      log_drop(drops, stage, pair.record, static_cast<int>(i), "duplicate_pair");
      continue;
    }
    slot = &pair;
  }

  std::vector<const Tuple*> complete;
  for (const auto& key : order) {
    const Tuple& t = tuples.at(key);
    if (t.bad == nullptr || t.none == nullptr) {
      const PreferencePair* present = t.bad ? t.bad : t.none;
      log_drop(drops, stage, present->record, -1, std::string(to_string(ErrorCode::UnpairedTuple)));
      continue;
    }
    complete.push_back(&t);
  }

  std::vector<RmBatch> batches;
  for (std::size_t start = 0; start < complete.size(); start += tuples_per_batch) {
    RmBatch batch;
    for (std::size_t k = start; k < std::min(start + tuples_per_batch, complete.size()); ++k) {
      batch.pairs.push_back(*complete[k]->bad);
      batch.pairs.push_back(*complete[k]->none);
      ++batch.tuples;
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

// ---------------------------------------------------------------------------
// Ingest and statistics

IngestDecision ingest_filter(std::string_view prompt) {
  if (prompt.size() < 10) return {false, "too_short"};
  std::string lowered(prompt);
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lowered.find("openai") != std::string::npos || lowered.find("chatgpt") != std::string::npos) {
    return {false, "identity_keyword"};
  }
  if (lowered.find("translate") != std::string::npos) return {false, "translate_keyword"};
  return {true, ""};
}

Moments moments(std::span<const double> values) {
  Moments m;
  m.count = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return m;
}

StatsTable descriptive_stats(std::span<const StatsRow> rows) {
  StatsTable table;
  if (rows.empty()) return table;

  auto summarize = [&](std::string name, auto&& include) {
    StatsGroup g;
    g.name = std::move(name);
    std::vector<double> fb, orig, edit, delta;
    for (const auto& row : rows) {
      if (!include(row)) continue;
      ++g.count;
      fb.insert(fb.end(), row.feedback_chars.begin(), row.feedback_chars.end());
      if (row.original_chars) orig.push_back(*row.original_chars);
      if (row.edited_chars) edit.push_back(*row.edited_chars);
      if (row.original_chars && row.edited_chars) delta.push_back(*row.edited_chars - *row.original_chars);
    }
    g.percent = 100.0 * static_cast<double>(g.count) / static_cast<double>(rows.size());
    g.feedback_chars = moments(fb);
    g.original_chars = moments(orig);
    g.edited_chars = moments(edit);
    g.delta_chars = moments(delta);
    return g;
  };

  for (Domain d : {Domain::General, Domain::Stem, Domain::Coding, Domain::Multilingual}) {
    auto g = summarize(std::string(to_string(d)), [d](const StatsRow& r) { return r.domain == d; });
    if (g.count > 0) table.groups.push_back(std::move(g));
  }
  table.groups.push_back(summarize("overall", [](const StatsRow&) { return true; }));
  return table;
}

std::vector<StatsRow> stats_rows(std::span<const AnnotationRecord> records) {
  std::vector<StatsRow> out;
  for (const auto& rec : records) {
    StatsRow row;
    row.domain = rec.domain;
    for (const auto& f : rec.feedback) row.feedback_chars.push_back(static_cast<double>(f.text.size()));
    row.original_chars = static_cast<double>(rec.response().size());
    if (const auto* good = first_edit(rec, EditQuality::Good)) {
      row.edited_chars = static_cast<double>(good->edited_text.size());
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<StatsRow> stats_rows(std::span<const FeedbackDemoRow> rows) {
  std::vector<StatsRow> out;
  for (const auto& r : rows) {
    StatsRow row;
    row.domain = r.domain;
    row.feedback_chars.push_back(static_cast<double>(r.feedback.size()));
    row.original_chars = static_cast<double>(r.conversation.last().content.size());
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<StatsRow> stats_rows(std::span<const EditDemoRow> rows) {
  std::vector<StatsRow> out;
  for (const auto& r : rows) {
    StatsRow row;
    row.domain = r.domain;
    for (const auto& f : r.feedback) row.feedback_chars.push_back(static_cast<double>(f.size()));
    row.original_chars = static_cast<double>(r.conversation.last().content.size());
    row.edited_chars = static_cast<double>(r.target.size());
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<StatsRow> stats_rows(std::span<const PreferencePair> pairs) {
  std::vector<StatsRow> out;
  for (const auto& p : pairs) {
    StatsRow row;
    row.domain = p.domain;
    for (const auto& f : p.feedback) row.feedback_chars.push_back(static_cast<double>(f.size()));
    row.original_chars = static_cast<double>(p.conversation.last().content.size());
    row.edited_chars = static_cast<double>(p.chosen.size());
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

std::string fixed(double v, int digits = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string mean_std(const Moments& m) {
  if (m.count == 0) return "-";
  return fixed(m.mean) + " (" + fixed(m.stddev) + ")";
}

}  // namespace

std::string stats_csv(const StatsTable& table) {
  std::ostringstream out;
  out << "group,count,percent,feedback_chars_mean,feedback_chars_std,response_chars_mean,"
         "response_chars_std,edited_chars_mean,edited_chars_std,delta_chars_mean,delta_chars_std\n";
  for (const auto& g : table.groups) {
    out << g.name << ',' << g.count << ',' << fixed(g.percent, 2);
    for (const Moments* m : {&g.feedback_chars, &g.original_chars, &g.edited_chars, &g.delta_chars}) {
      if (m->count == 0) {
        out << ",,";
      } else {
        out << ',' << fixed(m->mean, 2) << ',' << fixed(m->stddev, 2);
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string stats_markdown(const StatsTable& table) {
  std::ostringstream out;
  out << "| Group | Count (%) | Feedback Len. in Chars. (std.) | Response Len. in Chars. (std.) "
         "| Edited Len. in Chars. (std.) | Δ Len. in Chars. (std.) |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const auto& g : table.groups) {
    out << "| " << g.name << " | " << g.count << " (" << fixed(g.percent) << "%) | "
        << mean_std(g.feedback_chars) << " | " << mean_std(g.original_chars) << " | "
        << mean_std(g.edited_chars) << " | " << mean_std(g.delta_chars) << " |\n";
  }
  return out.str();
}

}  // namespace fescale
