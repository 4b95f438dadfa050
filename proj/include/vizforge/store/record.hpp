// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vizforge/common/io.hpp"
#include "vizforge/common/rational.hpp"

namespace vizforge {

inline constexpr int kSchemaVersion = 1;

enum class SourceType {
  kMatplotlib,
  kCharts,
  kAlgorithm,
  kMathematica,
  kAnimation,
  kScientificPl,
  kSvg,
  kWebUi,
  kGeneralArtifact,
  kScientificDemo,
};

inline constexpr SourceType kAllSourceTypes[] = {
    SourceType::kMatplotlib,   SourceType::kCharts, SourceType::kAlgorithm, SourceType::kMathematica,
    SourceType::kAnimation,    SourceType::kScientificPl, SourceType::kSvg, SourceType::kWebUi,
    SourceType::kGeneralArtifact, SourceType::kScientificDemo,
};

std::string_view to_string(SourceType t);
std::optional<SourceType> parse_source_type(std::string_view s);

enum class Format { kPaired, kCodeOnly };
std::string_view to_string(Format f);
std::optional<Format> parse_format(std::string_view s);

enum class Strategy {
  kNone,
  kGuidedEvolution,
  kRecontextualization,
  kReverseInstruction,
  kBidirectionalTranslation,
};

inline constexpr Strategy kSynthesisStrategies[] = {
    Strategy::kGuidedEvolution,
    Strategy::kRecontextualization,
    Strategy::kReverseInstruction,
    Strategy::kBidirectionalTranslation,
};

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);

/// Ordered; `status >= kSynthesized` is meaningful for lineage checks.
enum class Status { kRaw, kDecomposed, kSynthesized, kValidated, kRewarded, kRetained, kDropped };
std::string_view to_string(Status s);
std::optional<Status> parse_status(std::string_view s);

enum class MediaKind { kImage, kVideo, kHtmlSnapshot, kLog, kTestReport };
std::string_view to_string(MediaKind k);
std::optional<MediaKind> parse_media_kind(std::string_view s);

struct Lineage {
  std::vector<std::string> parents;
  Strategy strategy = Strategy::kNone;
  std::optional<std::string> concept_keyword;
  int generation_depth = 0;
  /// Strategy-specific provenance: task id, attempt, snippet span, target
  /// domain. Never contains floating-point values.
  std::map<std::string, std::string> detail;

  friend bool operator==(const Lineage&, const Lineage&) = default;
};

enum class TerminationReason { kExit, kTimeout, kResourceCap, kSpawnFailure };
std::string_view to_string(TerminationReason r);
std::optional<TerminationReason> parse_termination_reason(std::string_view s);

struct TestSummary {
  int passed = 0;
  int failed = 0;
  friend bool operator==(const TestSummary&, const TestSummary&) = default;
};

/// Outcome of one sandbox execution (V' = Exec(C', E)).
struct ValidationResult {
  bool passed = false;
  TerminationReason termination_reason = TerminationReason::kExit;
  std::optional<int> exit_code;
  std::optional<int> signal;
  std::int64_t duration_ms = 0;
  std::string stdout_tail;
  std::string stderr_tail;
  std::vector<std::string> artifacts;
  std::optional<TestSummary> test_summary;
  /// Gate diagnostic when the process exited 0 but expectations were not met.
  std::optional<std::string> diagnostic;

  friend bool operator==(const ValidationResult&, const ValidationResult&) = default;
};

enum class JudgeRole { kSynthesizer, kTextJudge, kVisionJudge };
std::string_view to_string(JudgeRole r);
std::optional<JudgeRole> parse_judge_role(std::string_view s);

/// Canonical reward dimension ids.
inline constexpr std::string_view kRewardDims[] = {
    "task_completion",
    "solution_coherence_code_quality",
    "visual_clarity",
    "task_relevance",
};

struct RewardScore {
  std::map<std::string, int> dims;
  Rational S;
  std::string chain_of_thought;
  JudgeRole judge_role = JudgeRole::kTextJudge;

  friend bool operator==(const RewardScore&, const RewardScore&) = default;
};

struct SampleRecord {
  std::string record_id;
  int revision = 0;
  SourceType source_type = SourceType::kMatplotlib;
  Format format = Format::kCodeOnly;
  std::optional<std::string> instruction;
  std::string code;
  std::vector<std::string> visual_refs;
  std::string language_tag;
  Lineage lineage;
  Status status = Status::kRaw;
  std::optional<RewardScore> reward;
  std::optional<ValidationResult> validation;
  /// Set when reward judging failed after the corrective re-ask.
  std::optional<std::string> judge_error;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// Content id: SHA-256 over the canonical form of (instruction, code,
/// visual_refs, source_type).
std::string compute_record_id(const SampleRecord& r);

/// Structural invariants that hold independently of any store or config.
/// Returns one diagnostic per violated field; empty means valid.
std::vector<std::string> check_record(const SampleRecord& r);

Json to_json(const Lineage& l);
Lineage lineage_from_json(const Json& j);
Json to_json(const ValidationResult& v);
ValidationResult validation_from_json(const Json& j);
Json to_json(const RewardScore& s);
RewardScore reward_from_json(const Json& j);
Json to_json(const SampleRecord& r);
SampleRecord record_from_json(const Json& j);

}  // namespace vizforge
