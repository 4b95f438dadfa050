// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vizforge/bench/bench.hpp"
#include "vizforge/bench/review.hpp"
#include "vizforge/decompose/decompose.hpp"
#include "vizforge/gateway/gateway.hpp"
#include "vizforge/ingest/ingest.hpp"
#include "vizforge/sandbox/sandbox.hpp"
#include "vizforge/store/run_manifest.hpp"
#include "vizforge/synthesis/matrix.hpp"

namespace vizforge {

enum class Stage { kIngest, kDecompose, kSynth, kValidate, kReward, kExport };
inline constexpr Stage kAllStages[] = {Stage::kIngest,   Stage::kDecompose, Stage::kSynth,
                                       Stage::kValidate, Stage::kReward,    Stage::kExport};
std::string_view to_string(Stage s);
std::optional<Stage> parse_stage(std::string_view s);

struct RoleSettings {
  std::string provider = "stub";  // "stub" | "http"
  HttpProviderOptions http;
  int max_retries = 2;
  int backoff_ms = 200;
  double rate_per_second = 0;
  double burst = 1;
};

struct PipelineConfig {
  /// The parsed document; its hash identifies the run.
  Json document;
  std::filesystem::path store_root;
  std::filesystem::path template_dir;
  std::filesystem::path export_dir;
  int max_parallel = 4;
  int checkpoint_every = 16;

  std::vector<SourceDescriptor> sources;
  MatrixConfig matrix;
  std::map<std::string, EnvProfile> profiles;
  DecomposeProfile decompose;
  std::set<SourceType> decompose_sources{SourceType::kAnimation};

  std::string executor = "process";  // "process" | "noop"
  std::filesystem::path workspace_root;
  std::size_t tail_bytes = 8192;

  std::map<JudgeRole, RoleSettings> roles;
  StubOptions stub;

  std::filesystem::path review_dir;
  ReviewConfig review;
  std::string review_host = "127.0.0.1";
  int review_port = 8765;
  std::optional<std::filesystem::path> review_static_dir;

  std::optional<std::filesystem::path> bench_tasks;
  std::filesystem::path bench_dir;
};

/// Every template id the stages use.
std::vector<std::string> required_templates();

/// Parses a config document. Relative paths resolve against `base_dir`.
/// Collects every problem into one ConfigError, including missing template
/// files (named by path).
PipelineConfig config_from_json(const Json& document, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

struct RunOptions {
  std::optional<std::string> run_id;
  bool stub_gateway = false;
  std::optional<int> max_parallel;
  /// Empty runs every stage in order.
  std::vector<Stage> stages;
  /// Polled between items; when set the stage checkpoints and returns.
  const std::atomic<bool>* stop = nullptr;
  std::function<void(const std::string& stage, const std::string& cursor)> checkpoint_hook;
  /// Overrides the configured executor (tests).
  std::shared_ptr<Executor> executor;
  /// Overrides providers per role (tests).
  std::map<JudgeRole, std::shared_ptr<Provider>> providers;
};

struct CorpusCounts {
  std::int64_t records = 0;
  std::int64_t candidates = 0;
  std::int64_t retained = 0;
  std::int64_t dropped = 0;
  std::int64_t judge_failed = 0;
  std::int64_t pending = 0;
};

struct RunSummary {
  std::string run_id;
  std::vector<std::string> stages_run;
  std::map<std::string, StageCounters> counters;
  CorpusCounts corpus;
  std::string corpus_digest;
  bool complete = false;
  /// The run had already finished; nothing was done.
  bool noop = false;
  bool interrupted = false;
  std::optional<std::string> fatal_stage;
  std::optional<std::string> fatal_error;
  std::vector<std::string> events;
};

Json to_json(const RunSummary& s);

/// Counts over the latest revision of every record. Candidates are records
/// produced by a synthesis strategy; judge_failed is the subset of dropped
/// candidates carrying a judge_error.
CorpusCounts count_corpus(const CorpusStore& store);

/// Runs the selected stages against the run's checkpoints. Fatal stage
/// errors are reported in the summary, not thrown; ConfigError and
/// LockError propagate.
RunSummary run_pipeline(const PipelineConfig& config, const RunOptions& options);

/// Builds the gateway the config describes; `stub` replaces every provider
/// with the deterministic stub. Throws ConfigError for a role with no
/// provider.
std::unique_ptr<Gateway> make_gateway(const PipelineConfig& config, CorpusStore* store, bool stub,
                                      const std::map<JudgeRole, std::shared_ptr<Provider>>& overrides = {});

struct BenchRunOptions {
  bool stub_gateway = false;
  std::optional<int> max_parallel;
  std::shared_ptr<Executor> executor;
  std::map<JudgeRole, std::shared_ptr<Provider>> providers;
};

struct BenchOutcome {
  std::vector<BenchRecord> records;
  std::vector<BenchScore> scores;
  BenchReport report;
  std::int64_t review_items_added = 0;
};

/// Generates, executes and judges every task in `config.bench_tasks`, queues
/// executed outputs with media for faithfulness review, then writes the
/// report under `config.bench_dir`. records.jsonl and scores.jsonl there are
/// journals, so an interrupted bench resumes. Throws EmptyReportError when
/// nothing could be scored.
BenchOutcome run_bench(const PipelineConfig& config, const BenchRunOptions& options);

/// Recomputes the report from the journals and the current review scores.
BenchReport refresh_bench_report(const PipelineConfig& config);

}  // namespace vizforge
