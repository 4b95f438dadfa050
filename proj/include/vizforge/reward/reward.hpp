// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vizforge/gateway/gateway.hpp"
#include "vizforge/store/record.hpp"
#include "vizforge/store/run_manifest.hpp"
#include "vizforge/synthesis/matrix.hpp"

namespace vizforge {

inline constexpr std::string_view kEditDims[] = {
    "instruction_adherence",
    "edit_quality_realism",
    "preservation",
};

struct EditVerdict {
  std::map<std::string, int> dims;
  int final = 0;
  /// The judge's own "Final Result", when it gave one.
  std::optional<int> judge_final;
  std::string chain_of_thought;

  bool discrepancy() const { return judge_final && *judge_final != final; }
};

/// Exact mean of the four reward dimensions. Throws PreconditionError when a
/// dimension is missing, unknown or outside [1, 5].
Rational reward_mean(const std::map<std::string, int>& dims);

/// 1 when every edit dimension is at least 3. Same preconditions as
/// reward_mean over kEditDims.
int edit_final(const std::map<std::string, int>& dims);

/// Judge reply contracts. Both are lenient: fences and surrounding prose are
/// tolerated and the judge's own total or verdict is never trusted.
JudgeSchema reward_schema();
JudgeSchema edit_schema();

/// Artifacts a judge should see: the validation artifacts when there are
/// any, else the record's own visuals.
std::vector<std::string> judge_visuals(const SampleRecord& record);

struct RewardTemplates {
  std::string vision = "reward-vision";
  std::string text = "reward-text";
  std::string edit = "reward-edit";
};

class RewardJudge {
 public:
  using Log = std::function<void(std::string_view kind, const Json& detail)>;

  explicit RewardJudge(Gateway& gateway, RewardTemplates templates = {}, Log log = {});

  /// Vision judge when `allow_vision` and the record has visuals, else the
  /// text judge. S is computed locally. Throws JudgeFormatError after a
  /// failed re-ask and PreconditionError for empty code.
  RewardScore score_sample(const SampleRecord& record, bool allow_vision = true);

  /// Judges an edit from two images. The final verdict is recomputed and a
  /// disagreeing judge verdict is logged as "edit_verdict_discrepancy".
  EditVerdict judge_edit(const std::string& before_visual, const std::string& after_visual,
                         const std::string& instruction);

 private:
  Gateway& gateway_;
  RewardTemplates templates_;
  Log log_;
};

enum class Decision { kRetained, kDropped, kJudgeFailed };
std::string_view to_string(Decision d);

/// Retention for one record: rewarded records are retained when S reaches
/// the source's threshold and the validation gate holds (passed, or the
/// source has no validation backend). Records carrying a judge_error are
/// judge_failed. Throws PreconditionError for anything else.
Decision retention_decision(const SampleRecord& record, const MatrixConfig& matrix);

struct FilterResult {
  std::vector<std::string> retained;
  std::vector<std::string> dropped;
  std::vector<std::string> judge_failed;
};

/// Partitions record ids exactly. Checks every record before deciding any,
/// so a precondition failure leaves counters untouched. Counts retained as
/// accepted and the other two as rejected.
FilterResult apply_filter(const std::vector<SampleRecord>& records, const MatrixConfig& matrix,
                          StageCounters* counters = nullptr);

/// One reward report line: record_id, dims, S, decision, judge_role.
Json report_line(const SampleRecord& record, Decision decision);

/// Writes one report line per record, in input order, atomically.
void write_reward_report(const std::filesystem::path& path, const std::vector<SampleRecord>& records,
                         const MatrixConfig& matrix);

}  // namespace vizforge
