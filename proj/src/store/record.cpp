// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/store/record.hpp"

#include <array>
#include <utility>

#include "vizforge/common/errors.hpp"
#include "vizforge/common/hash.hpp"

namespace vizforge {
namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<SourceType, 10> kSourceNames{{
    {SourceType::kMatplotlib, "matplotlib"},
    {SourceType::kCharts, "charts"},
    {SourceType::kAlgorithm, "algorithm"},
    {SourceType::kMathematica, "mathematica"},
    {SourceType::kAnimation, "animation"},
    {SourceType::kScientificPl, "scientific-pl"},
    {SourceType::kSvg, "svg"},
    {SourceType::kWebUi, "webui"},
    {SourceType::kGeneralArtifact, "general-artifact"},
    {SourceType::kScientificDemo, "scientific-demo"},
}};

constexpr NameTable<Format, 2> kFormatNames{{{Format::kPaired, "paired"}, {Format::kCodeOnly, "code_only"}}};

constexpr NameTable<Strategy, 5> kStrategyNames{{
    {Strategy::kNone, "none"},
    {Strategy::kGuidedEvolution, "guided_evolution"},
    {Strategy::kRecontextualization, "recontextualization"},
    {Strategy::kReverseInstruction, "reverse_instruction"},
    {Strategy::kBidirectionalTranslation, "bidirectional_translation"},
}};

constexpr NameTable<Status, 7> kStatusNames{{
    {Status::kRaw, "raw"},
    {Status::kDecomposed, "decomposed"},
    {Status::kSynthesized, "synthesized"},
    {Status::kValidated, "validated"},
    {Status::kRewarded, "rewarded"},
    {Status::kRetained, "retained"},
    {Status::kDropped, "dropped"},
}};

constexpr NameTable<MediaKind, 5> kMediaNames{{
    {MediaKind::kImage, "image"},
    {MediaKind::kVideo, "video"},
    {MediaKind::kHtmlSnapshot, "html_snapshot"},
    {MediaKind::kLog, "log"},
    {MediaKind::kTestReport, "test_report"},
}};

constexpr NameTable<TerminationReason, 4> kTerminationNames{{
    {TerminationReason::kExit, "exit"},
    {TerminationReason::kTimeout, "timeout"},
    {TerminationReason::kResourceCap, "resource_cap"},
    {TerminationReason::kSpawnFailure, "spawn_failure"},
}};

constexpr NameTable<JudgeRole, 3> kRoleNames{{
    {JudgeRole::kSynthesizer, "synthesizer"},
    {JudgeRole::kTextJudge, "text_judge"},
    {JudgeRole::kVisionJudge, "vision_judge"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E value) {
  for (const auto& [e, n] : table) {
    if (e == value) return n;
  }
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const NameTable<E, N>& table, std::string_view name) {
  for (const auto& [e, n] : table) {
    if (n == name) return e;
  }
  return std::nullopt;
}

template <typename T>
T require(std::optional<T> v, std::string_view field, const Json& raw) {
  if (!v) throw Error("record field '" + std::string(field) + "' has invalid value " + raw.dump());
  return *v;
}

}  // namespace

std::string_view to_string(SourceType t) { return name_of(kSourceNames, t); }
std::optional<SourceType> parse_source_type(std::string_view s) { return value_of(kSourceNames, s); }
std::string_view to_string(Format f) { return name_of(kFormatNames, f); }
std::optional<Format> parse_format(std::string_view s) { return value_of(kFormatNames, s); }
std::string_view to_string(Strategy s) { return name_of(kStrategyNames, s); }
std::optional<Strategy> parse_strategy(std::string_view s) { return value_of(kStrategyNames, s); }
std::string_view to_string(Status s) { return name_of(kStatusNames, s); }
std::optional<Status> parse_status(std::string_view s) { return value_of(kStatusNames, s); }
std::string_view to_string(MediaKind k) { return name_of(kMediaNames, k); }
std::optional<MediaKind> parse_media_kind(std::string_view s) { return value_of(kMediaNames, s); }
std::string_view to_string(TerminationReason r) { return name_of(kTerminationNames, r); }
std::optional<TerminationReason> parse_termination_reason(std::string_view s) {
  return value_of(kTerminationNames, s);
}
std::string_view to_string(JudgeRole r) { return name_of(kRoleNames, r); }
std::optional<JudgeRole> parse_judge_role(std::string_view s) { return value_of(kRoleNames, s); }

std::string compute_record_id(const SampleRecord& r) {
  Json identity = {
      {"code", r.code},
      {"source_type", to_string(r.source_type)},
      {"visual_refs", r.visual_refs},
  };
  if (r.instruction) identity["instruction"] = *r.instruction;
  return sha256_hex(canonical_dump(identity));
}

std::vector<std::string> check_record(const SampleRecord& r) {
  std::vector<std::string> diag;
  if (r.code.empty()) diag.emplace_back("code: empty");
  if (r.format == Format::kPaired && (!r.instruction || r.instruction->empty())) {
    diag.emplace_back("instruction: required for paired format");
  }
  if (r.format == Format::kCodeOnly && r.instruction) {
    diag.emplace_back("instruction: must be absent for code_only format");
  }
  if (!is_valid_utf8(r.code) || (r.instruction && !is_valid_utf8(*r.instruction))) {
    diag.emplace_back("text: invalid UTF-8");
  }
  for (const auto& ref : r.visual_refs) {
    if (!is_sha256_hex(ref)) diag.push_back("visual_refs: not a content hash: " + ref);
  }
  const auto& l = r.lineage;
  const bool none = l.strategy == Strategy::kNone;
  if (none != l.parents.empty() || none != (l.generation_depth == 0)) {
    diag.emplace_back("lineage: strategy=none, empty parents and depth 0 must coincide");
  }
  if (l.generation_depth < 0) diag.emplace_back("lineage.generation_depth: negative");
  if (r.revision < 0) diag.emplace_back("revision: negative");
  if (r.reward) {
    int sum = 0;
    for (const auto dim : kRewardDims) {
      const auto it = r.reward->dims.find(std::string(dim));
      if (it == r.reward->dims.end()) {
        diag.push_back("reward.dims: missing " + std::string(dim));
        continue;
      }
      if (it->second < 1 || it->second > 5) diag.push_back("reward.dims." + std::string(dim) + ": outside [1,5]");
      sum += it->second;
    }
    if (r.reward->dims.size() != std::size(kRewardDims)) diag.emplace_back("reward.dims: unexpected dimension");
    if (diag.empty() && r.reward->S != Rational(sum, static_cast<std::int64_t>(std::size(kRewardDims)))) {
      diag.emplace_back("reward.S: not the mean of dims");
    }
  }
  if (r.status == Status::kRetained && !r.reward) diag.emplace_back("status: retained without reward");
  if (r.validation && r.validation->passed &&
      (r.validation->termination_reason != TerminationReason::kExit || r.validation->exit_code != 0)) {
    diag.emplace_back("validation: passed requires a clean exit");
  }
  if (!r.record_id.empty() && r.record_id != compute_record_id(r)) {
    diag.emplace_back("record_id: does not match content");
  }
  return diag;
}

Json to_json(const Lineage& l) {
  Json j = {
      {"parents", l.parents},
      {"strategy", to_string(l.strategy)},
      {"generation_depth", l.generation_depth},
      {"detail", l.detail},
  };
  if (l.concept_keyword) j["concept"] = *l.concept_keyword;
  return j;
}

Lineage lineage_from_json(const Json& j) {
  Lineage l;
  l.parents = j.at("parents").get<std::vector<std::string>>();
  l.strategy = require(parse_strategy(j.at("strategy").get<std::string>()), "lineage.strategy", j.at("strategy"));
  if (j.contains("concept")) l.concept_keyword = j.at("concept").get<std::string>();
  l.generation_depth = j.at("generation_depth").get<int>();
  if (j.contains("detail")) l.detail = j.at("detail").get<std::map<std::string, std::string>>();
  return l;
}

Json to_json(const ValidationResult& v) {
  Json j = {
      {"passed", v.passed},
      {"termination_reason", to_string(v.termination_reason)},
      {"duration_ms", v.duration_ms},
      {"stdout_tail", v.stdout_tail},
      {"stderr_tail", v.stderr_tail},
      {"artifacts", v.artifacts},
  };
  if (v.exit_code) j["exit_code"] = *v.exit_code;
  if (v.signal) j["signal"] = *v.signal;
  if (v.test_summary) j["test_summary"] = {{"passed", v.test_summary->passed}, {"failed", v.test_summary->failed}};
  if (v.diagnostic) j["diagnostic"] = *v.diagnostic;
  return j;
}

ValidationResult validation_from_json(const Json& j) {
  ValidationResult v;
  v.passed = j.at("passed").get<bool>();
  v.termination_reason = require(parse_termination_reason(j.at("termination_reason").get<std::string>()),
                                 "validation.termination_reason", j.at("termination_reason"));
  v.duration_ms = j.at("duration_ms").get<std::int64_t>();
  v.stdout_tail = j.at("stdout_tail").get<std::string>();
  v.stderr_tail = j.at("stderr_tail").get<std::string>();
  v.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  if (j.contains("exit_code")) v.exit_code = j.at("exit_code").get<int>();
  if (j.contains("signal")) v.signal = j.at("signal").get<int>();
  if (j.contains("test_summary")) {
    v.test_summary = TestSummary{j["test_summary"].at("passed").get<int>(), j["test_summary"].at("failed").get<int>()};
  }
  if (j.contains("diagnostic")) v.diagnostic = j.at("diagnostic").get<std::string>();
  return v;
}

Json to_json(const RewardScore& s) {
  return {
      {"dims", s.dims},
      {"S", s.S.to_string()},
      {"chain_of_thought", s.chain_of_thought},
      {"judge_role", to_string(s.judge_role)},
  };
}

RewardScore reward_from_json(const Json& j) {
  RewardScore s;
  s.dims = j.at("dims").get<std::map<std::string, int>>();
  s.S = Rational::parse(j.at("S").get<std::string>());
  s.chain_of_thought = j.at("chain_of_thought").get<std::string>();
  s.judge_role = require(parse_judge_role(j.at("judge_role").get<std::string>()), "reward.judge_role", j.at("judge_role"));
  return s;
}

Json to_json(const SampleRecord& r) {
  Json j = {
      {"schema_version", kSchemaVersion},
      {"record_id", r.record_id},
      {"revision", r.revision},
      {"source_type", to_string(r.source_type)},
      {"format", to_string(r.format)},
      {"code", r.code},
      {"visual_refs", r.visual_refs},
      {"language_tag", r.language_tag},
      {"lineage", to_json(r.lineage)},
      {"status", to_string(r.status)},
  };
  if (r.instruction) j["instruction"] = *r.instruction;
  if (r.reward) j["reward"] = to_json(*r.reward);
  if (r.validation) j["validation"] = to_json(*r.validation);
  if (r.judge_error) j["judge_error"] = *r.judge_error;
  return j;
}

SampleRecord record_from_json(const Json& j) {
  if (j.value("schema_version", 0) != kSchemaVersion) {
    throw Error("unsupported record schema_version " + j.value("schema_version", Json()).dump());
  }
  SampleRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  r.revision = j.at("revision").get<int>();
  r.source_type = require(parse_source_type(j.at("source_type").get<std::string>()), "source_type", j.at("source_type"));
  r.format = require(parse_format(j.at("format").get<std::string>()), "format", j.at("format"));
  if (j.contains("instruction")) r.instruction = j.at("instruction").get<std::string>();
  r.code = j.at("code").get<std::string>();
  r.visual_refs = j.at("visual_refs").get<std::vector<std::string>>();
  r.language_tag = j.at("language_tag").get<std::string>();
  r.lineage = lineage_from_json(j.at("lineage"));
  r.status = require(parse_status(j.at("status").get<std::string>()), "status", j.at("status"));
  if (j.contains("reward")) r.reward = reward_from_json(j.at("reward"));
  if (j.contains("validation")) r.validation = validation_from_json(j.at("validation"));
  if (j.contains("judge_error")) r.judge_error = j.at("judge_error").get<std::string>();
  return r;
}

}  // namespace vizforge
