// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vizforge/common/rational.hpp"
#include "vizforge/gateway/gateway.hpp"
#include "vizforge/sandbox/sandbox.hpp"
#include "vizforge/store/record.hpp"

namespace vizforge {

enum class Engine { kManim, kWolfram };
std::string_view to_string(Engine e);
std::optional<Engine> parse_engine(std::string_view s);
/// manim → manim-render, wolfram → wolfram-eval.
std::string_view profile_for(Engine e);

struct BenchTask {
  std::string task_id;
  Engine engine = Engine::kManim;
  std::string instruction;
  std::string reference_code;
  std::string env_profile_id;

  friend bool operator==(const BenchTask&, const BenchTask&) = default;
};

/// Throws MalformedItemError. A missing env_profile_id is derived from the
/// engine; a mismatched one is an error.
BenchTask bench_task_from_json(const Json& j);
Json to_json(const BenchTask& t);

/// One task per non-blank line; duplicate ids are a MalformedItemError that
/// names the line.
std::vector<BenchTask> load_bench_tasks(const std::filesystem::path& path);

struct BenchRecord {
  std::string task_id;
  Engine engine = Engine::kManim;
  /// Absent when no code could be extracted from the response.
  std::optional<std::string> generated_code;
  int s_exec = 0;
  /// Why s_exec is 0: "no_code", "error: ..." or the validation's
  /// termination reason.
  std::optional<std::string> reason;
  std::optional<ValidationResult> validation;
  std::vector<std::string> artifacts;

  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

Json to_json(const BenchRecord& r);
BenchRecord bench_record_from_json(const Json& j);

struct SuiteOptions {
  std::string generate_template = "bench-generate";
  /// Journal of finished records; tasks already in it are not rerun.
  std::filesystem::path journal;
  int max_parallel = 1;
};

/// Generates, extracts and executes each task. Finished records are appended
/// to the journal as they complete. Task-level failures become s_exec = 0
/// records; GatewayUnavailableError and StorageError propagate. Returns one
/// record per task in task order.
std::vector<BenchRecord> run_suite(const std::vector<BenchTask>& tasks, Gateway& gateway, Executor& executor,
                                   const std::map<std::string, EnvProfile>& profiles, const SuiteOptions& options);

struct BenchScore {
  std::string task_id;
  Engine engine = Engine::kManim;
  int s_exec = 0;
  std::optional<int> s_sim;
  std::optional<int> s_align;
  /// Integer on a single annotation; the exact mean when a quorum averages
  /// several.
  std::optional<Rational> s_faith;
  Rational overall;
  bool faith_included = false;
  /// Judge output unusable after the re-ask; excluded from means.
  bool unscored = false;
  std::optional<std::string> error;

  friend bool operator==(const BenchScore&, const BenchScore&) = default;
};

Json to_json(const BenchScore& s);
BenchScore bench_score_from_json(const Json& j);

/// s_exec · (s_sim + s_align [+ s_faith]). Throws PreconditionError when
/// s_exec is not 0/1, a judge score is outside [1, 5] or missing while
/// s_exec = 1, or a judge score is given while s_exec = 0.
BenchScore make_score(const std::string& task_id, Engine engine, int s_exec, std::optional<int> s_sim,
                      std::optional<int> s_align, std::optional<Rational> s_faith);

/// Replaces the faith term and recomputes overall. Unscored stays unscored.
BenchScore with_faith(BenchScore score, std::optional<Rational> s_faith);

/// Strict single-line judge contract for code similarity and alignment.
JudgeSchema bench_judge_schema();

struct ScoreOptions {
  std::string judge_template = "bench-judge";
};

/// Judges executed records; never calls the judge when s_exec = 0. A judge
/// format error after the re-ask yields an unscored score.
BenchScore score_record(const BenchRecord& record, const BenchTask& task, Gateway& gateway,
                        std::optional<Rational> s_faith = std::nullopt, const ScoreOptions& options = {});

struct EngineReport {
  int records = 0;
  int scored = 0;
  int unscored = 0;
  int executed = 0;
  /// executed / records.
  double exec_rate = 0;
  /// Mean of s_exec · (s_sim + s_align) over scored records.
  double mean_without_faith = 0;
  /// Mean of the faith-bearing overall over scored records that either carry
  /// a faith score or did not execute; absent when that population is empty.
  std::optional<double> mean_with_faith;
  int faith_population = 0;
  /// Executed, scored records with faith / executed, scored records.
  double faith_coverage = 0;
  /// mean_with_faith when every executed scored record has faith, else
  /// mean_without_faith.
  double mean = 0;
  bool mean_includes_faith = false;
};

struct BenchReport {
  std::map<std::string, EngineReport> engines;
  int records = 0;
  int scored = 0;
  int unscored = 0;
};

/// Throws EmptyReportError when no record is scored.
BenchReport aggregate_report(const std::vector<BenchScore>& scores);
Json to_json(const BenchReport& r);
std::string render_report_text(const BenchReport& r);
/// report.json and report.txt under `dir`.
void write_report(const std::filesystem::path& dir, const BenchReport& r);

}  // namespace vizforge
