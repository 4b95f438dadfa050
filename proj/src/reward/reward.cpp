// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/reward/reward.hpp"

#include <algorithm>

#include "vizforge/common/errors.hpp"

namespace vizforge {
namespace {

// Reply keys as the rubric templates spell them, mapped to canonical ids.
const std::pair<std::string_view, std::string_view> kRewardKeys[] = {
    {"Task Completion", "task_completion"},
    {"Solution Coherence & Code Quality", "solution_coherence_code_quality"},
    {"Visual Clarity", "visual_clarity"},
    {"Task Relevance", "task_relevance"},
};

const std::pair<std::string_view, std::string_view> kEditKeys[] = {
    {"Instruction Adherence Score", "instruction_adherence"},
    {"Edit Quality & Realism Score", "edit_quality_realism"},
    {"Preservation of Unrelated Areas Score", "preservation"},
};

constexpr std::string_view kThought = "Chain of Thought";

template <std::size_t N>
void check_dims(const std::map<std::string, int>& dims, const std::string_view (&ids)[N]) {
  std::vector<std::string> bad;
  for (const auto id : ids) {
    const auto it = dims.find(std::string(id));
    if (it == dims.end()) bad.push_back(std::string(id) + " missing");
    else if (it->second < 1 || it->second > 5) bad.push_back(std::string(id) + "=" + std::to_string(it->second));
  }
  for (const auto& [k, v] : dims) {
    if (std::find(std::begin(ids), std::end(ids), k) == std::end(ids)) bad.push_back(k + " unknown");
  }
  if (!bad.empty()) {
    std::string msg = "invalid dimensions:";
    for (const auto& b : bad) msg += " " + b;
    throw PreconditionError(msg);
  }
}

template <std::size_t N>
JudgeSchema schema_for(std::string name, const std::pair<std::string_view, std::string_view> (&keys)[N]) {
  JudgeSchema s;
  s.name = std::move(name);
  for (const auto& [key, id] : keys) s.scores.push_back({{std::string(key)}, 1, 5});
  s.texts.push_back({{std::string(kThought)}, /*required=*/false, false});
  return s;
}

template <std::size_t N>
std::map<std::string, int> dims_from(const JudgeResult& r, const std::pair<std::string_view, std::string_view> (&keys)[N]) {
  std::map<std::string, int> dims;
  for (const auto& [key, id] : keys) dims[std::string(id)] = r.scores.at(std::string(key));
  return dims;
}

std::string thought_of(const JudgeResult& r) {
  const auto it = r.object.find(std::string(kThought));
  return it != r.object.end() && it->is_string() ? it->get<std::string>() : std::string();
}

}  // namespace

Rational reward_mean(const std::map<std::string, int>& dims) {
  check_dims(dims, kRewardDims);
  std::int64_t sum = 0;
  for (const auto& [k, v] : dims) sum += v;
  return Rational(sum, 4);
}

int edit_final(const std::map<std::string, int>& dims) {
  check_dims(dims, kEditDims);
  return std::all_of(dims.begin(), dims.end(), [](const auto& kv) { return kv.second >= 3; }) ? 1 : 0;
}

JudgeSchema reward_schema() {
  auto s = schema_for("reward", kRewardKeys);
  s.optional_keys.push_back({"Total Score"});
  return s;
}

JudgeSchema edit_schema() {
  auto s = schema_for("reward-edit", kEditKeys);
  s.optional_keys.push_back({"Final Result"});
  return s;
}

std::vector<std::string> judge_visuals(const SampleRecord& record) {
  if (record.validation && !record.validation->artifacts.empty()) return record.validation->artifacts;
  return record.visual_refs;
}

RewardJudge::RewardJudge(Gateway& gateway, RewardTemplates templates, Log log)
    : gateway_(gateway), templates_(std::move(templates)), log_(std::move(log)) {}

RewardScore RewardJudge::score_sample(const SampleRecord& record, bool allow_vision) {
  if (trim(record.code).empty()) throw PreconditionError("record " + record.record_id + " has no code");
  GatewayRequest req;
  req.task_id = record.record_id;
  req.variables = {{"instruction", record.instruction.value_or("")}, {"code", record.code}};
  auto visuals = judge_visuals(record);
  const bool vision = allow_vision && !visuals.empty();
  req.role = vision ? JudgeRole::kVisionJudge : JudgeRole::kTextJudge;
  req.template_id = vision ? templates_.vision : templates_.text;
  if (vision) req.attachments = std::move(visuals);

  const auto result = gateway_.judge_structured(req, reward_schema());
  RewardScore score;
  score.dims = dims_from(result, kRewardKeys);
  score.S = reward_mean(score.dims);
  score.chain_of_thought = thought_of(result);
  score.judge_role = req.role;
  return score;
}

EditVerdict RewardJudge::judge_edit(const std::string& before_visual, const std::string& after_visual,
                                    const std::string& instruction) {
  GatewayRequest req;
  req.role = JudgeRole::kVisionJudge;
  req.template_id = templates_.edit;
  req.variables = {{"instruction", instruction}};
  req.attachments = {before_visual, after_visual};
  req.task_id = before_visual.substr(0, 12) + ".." + after_visual.substr(0, 12);

  const auto result = gateway_.judge_structured(req, edit_schema());
  EditVerdict v;
  v.dims = dims_from(result, kEditKeys);
  v.final = edit_final(v.dims);
  v.chain_of_thought = thought_of(result);
  if (const auto it = result.object.find("Final Result"); it != result.object.end()) {
    if (it->is_number_integer()) {
      v.judge_final = it->get<int>();
    } else if (it->is_string()) {
      const auto s = trim(it->get<std::string>());
      if (s == "0" || s == "1") v.judge_final = s == "1";
    }
  }
  if (v.discrepancy() && log_) {
    log_("edit_verdict_discrepancy",
         {{"task_id", req.task_id}, {"judge_final", *v.judge_final}, {"computed_final", v.final}, {"dims", v.dims}});
  }
  return v;
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::kRetained: return "retained";
    case Decision::kDropped: return "dropped";
    case Decision::kJudgeFailed: return "judge_failed";
  }
  return "?";
}

Decision retention_decision(const SampleRecord& record, const MatrixConfig& matrix) {
  if (record.judge_error) return Decision::kJudgeFailed;
  if (!record.reward) throw PreconditionError("record " + record.record_id + " has not been rewarded");
  const auto* row = matrix.row(record.source_type);
  if (!row) {
    throw PreconditionError("record " + record.record_id + " has source type " +
                            std::string(to_string(record.source_type)) + " with no matrix row");
  }
  const bool gate = row->validation_profile == "none" || (record.validation && record.validation->passed);
  const bool passes = record.reward->S >= matrix.threshold_for(record.source_type);
  return gate && passes ? Decision::kRetained : Decision::kDropped;
}

FilterResult apply_filter(const std::vector<SampleRecord>& records, const MatrixConfig& matrix,
                          StageCounters* counters) {
  std::vector<Decision> decisions;
  decisions.reserve(records.size());
  for (const auto& r : records) decisions.push_back(retention_decision(r, matrix));
  FilterResult out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& id = records[i].record_id;
    switch (decisions[i]) {
      case Decision::kRetained: out.retained.push_back(id); break;
      case Decision::kDropped: out.dropped.push_back(id); break;
      case Decision::kJudgeFailed: out.judge_failed.push_back(id); break;
    }
  }
  if (counters) {
    counters->accepted += static_cast<std::int64_t>(out.retained.size());
    counters->rejected += static_cast<std::int64_t>(out.dropped.size() + out.judge_failed.size());
  }
  return out;
}

Json report_line(const SampleRecord& record, Decision decision) {
  Json j = {{"record_id", record.record_id}, {"decision", to_string(decision)}};
  if (record.reward) {
    j["dims"] = record.reward->dims;
    j["S"] = record.reward->S.to_string();
    j["judge_role"] = to_string(record.reward->judge_role);
  } else {
    j["dims"] = nullptr;
    j["S"] = nullptr;
    j["judge_role"] = nullptr;
    if (record.judge_error) j["judge_error"] = *record.judge_error;
  }
  return j;
}

void write_reward_report(const std::filesystem::path& path, const std::vector<SampleRecord>& records,
                         const MatrixConfig& matrix) {
  std::string out;
  for (const auto& r : records) out += canonical_dump(report_line(r, retention_decision(r, matrix))) + "\n";
  write_file_atomic(path, out);
}

}  // namespace vizforge
