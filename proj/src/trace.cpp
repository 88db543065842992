#include <ostream>

#include <json.hpp>

#include "fescale/jsonio.hpp"
#include "fescale/pipeline.hpp"

namespace fescale {

namespace {

using nlohmann::json;

void emit(std::ostream& out, json record, std::string_view prompt_id, std::string_view event) {
  record["prompt_id"] = prompt_id;
  record["event"] = event;
  out << record.dump() << '\n';
}

}  // namespace

void write_trace_jsonl(std::ostream& out, const PipelineTrace& trace, std::string_view prompt_id) {
  emit(out, {{"kind", trace.kind}}, prompt_id, "run");
  for (const auto& call : trace.calls) {
    emit(out,
         {{"stage", to_string(call.stage)},
          {"branch", call.branch},
          {"feedback_set", call.feedback_set},
          {"fingerprint", call.fingerprint},
          {"temperature", call.temperature},
          {"n", call.n},
          {"outputs", call.outputs},
          {"prompt_tokens", call.usage.prompt_tokens},
          {"completion_tokens", call.usage.completion_tokens}},
         prompt_id, "call");
  }
  for (const auto& f : trace.filters) {
    emit(out,
         {{"filter", to_string(f.filter)},
          {"branch", f.branch},
          {"sample_index", f.sample_index},
          {"kept", f.kept},
          {"reason", f.reason}},
         prompt_id, "filter");
  }
  for (std::size_t b = 0; b < trace.feedback_sets.size(); ++b) {
    for (std::size_t s = 0; s < trace.feedback_sets[b].size(); ++s) {
      json samples = json::array();
      for (const auto& fb : trace.feedback_sets[b][s].items()) samples.push_back(fb.sample_index);
      emit(out, {{"branch", b}, {"index", s}, {"samples", samples}}, prompt_id, "feedback_set");
    }
  }
  for (int b : trace.fallback_branches) {
    emit(out, {{"branch", b}, {"reason", "no_effective_feedback"}}, prompt_id, "fallback");
  }
  for (std::size_t i = 0; i < trace.pool.size(); ++i) {
    const auto& c = trace.pool[i];
    json rec = {{"pool_index", i}, {"provenance", provenance_to_json(c.provenance)}};
    rec["reward"] = c.reward ? json(*c.reward) : json(nullptr);
    emit(out, std::move(rec), prompt_id, "candidate");
  }
  for (const auto& s : trace.scores) {
    emit(out, {{"pool_index", s.pool_index}, {"reward", s.reward}}, prompt_id, "score");
  }
  emit(out, {{"pool_index", trace.selected}}, prompt_id, "selection");

  const Accounting acc = account(trace);
  json stages = json::object();
  for (int s = 0; s < kStageCount; ++s) {
    const auto& st = acc.stages[static_cast<std::size_t>(s)];
    stages[std::string(to_string(static_cast<Stage>(s)))] = {
        {"calls", st.calls},
        {"samples", st.samples},
        {"prompt_tokens", st.usage.prompt_tokens},
        {"completion_tokens", st.usage.completion_tokens}};
  }
  emit(out, {{"stages", stages}, {"parallel_depth", acc.parallel_depth}}, prompt_id, "accounting");
}

}  // namespace fescale
