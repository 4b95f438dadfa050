// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "vizforge/common/io.hpp"
#include "vizforge/store/corpus_store.hpp"
#include "vizforge/store/run_manifest.hpp"
#include "vizforge/synthesis/synthesis.hpp"

namespace vizforge {

inline constexpr std::string_view kNoProfile = "none";

struct EnvProfile {
  std::string profile_id;
  /// argv; {main}, {workspace}, {out_dir} and {settle_seconds} are
  /// substituted.
  std::vector<std::string> command;
  std::string extension = "py";
  std::chrono::milliseconds timeout{60'000};
  std::chrono::milliseconds grace{5'000};
  std::uint64_t memory_bytes = 2ULL << 30;  // 0 disables the cap
  std::optional<int> cpu_seconds;
  /// Relative to the workspace; '*' and '?' match within one path segment,
  /// '**' across segments.
  std::vector<std::string> artifact_globs;
  int min_artifacts = 0;
  /// Read {out_dir}/manifest.json written by a capture shim.
  bool capture_manifest = false;
  /// Regexes over stdout+stderr that fail an otherwise clean run.
  std::vector<std::string> error_patterns;
  /// Parse "N passed" / "N failed" counts from the output; any failure fails
  /// the run.
  bool tests = false;
  int settle_seconds = 2;
  std::map<std::string, std::string> env;
  /// Extra files written next to main.{ext}.
  std::map<std::string, std::string> resource_files;

  bool executes() const { return profile_id != kNoProfile; }
};

/// Built-in profiles keyed by id, including "none".
std::map<std::string, EnvProfile> default_profiles();

/// Overlays a "profiles" config section onto the defaults. Throws
/// ConfigError naming offending keys.
std::map<std::string, EnvProfile> profiles_from_json(const Json& j);

/// One entry of a capture shim's manifest.json.
struct CapturedFile {
  std::string path;
  MediaKind media_kind = MediaKind::kImage;
};

struct CaptureManifest {
  std::vector<CapturedFile> produced;
  std::optional<std::string> error;
  double wall_time = 0;
};

/// Parses a shim manifest. Throws MalformedItemError on schema violations.
CaptureManifest parse_capture_manifest(const Json& j);
Json to_json(const CaptureManifest& m);

/// Diagnostics for entries outside `out_dir`, missing or empty; empty means
/// valid.
std::vector<std::string> check_capture_manifest(const CaptureManifest& m, const std::filesystem::path& out_dir);

class Executor {
 public:
  virtual ~Executor() = default;
  /// Never throws for failures of the program itself. Throws
  /// PreconditionError for profile "none" and StorageError when artifacts
  /// cannot be stored.
  virtual ValidationResult execute(const std::string& code, const EnvProfile& profile) = 0;
};

struct SandboxOptions {
  std::filesystem::path workspace_root = std::filesystem::temp_directory_path();
  std::string created_by = "sandbox";
  std::size_t tail_bytes = 8192;
  int max_parallel = 4;
};

/// Runs each program as a subprocess in a fresh workspace.
class ProcessSandbox final : public Executor {
 public:
  /// `store` may be null, in which case artifacts are hashed but not kept.
  ProcessSandbox(CorpusStore* store, SandboxOptions options = {});
  ValidationResult execute(const std::string& code, const EnvProfile& profile) override;

 private:
  CorpusStore* store_;
  SandboxOptions options_;
  std::counting_semaphore<1024> slots_;
};

/// Executes nothing: passes unless the code contains `fail_marker`.
class NoopExecutor final : public Executor {
 public:
  explicit NoopExecutor(std::string fail_marker = "# vizforge-stub: fail") : fail_marker_(std::move(fail_marker)) {}
  ValidationResult execute(const std::string& code, const EnvProfile& profile) override;

 private:
  std::string fail_marker_;
};

struct RetryDecision {
  enum class Kind { kRetry, kDrop };
  Kind kind = Kind::kDrop;
  std::string feedback;
};

/// Retry with a bounded diagnostic while task.attempt < max_retries, else
/// drop. Throws PreconditionError for a passed result.
RetryDecision route_failure(const SynthesisTask& task, const ValidationResult& result, int max_retries,
                            StageCounters* counters = nullptr);

/// Bounded, human-readable summary of why a run failed.
std::string failure_diagnostic(const ValidationResult& result, std::size_t limit = 2000);

/// '*' and '?' within a segment, '**' across segments.
bool glob_match(std::string_view pattern, std::string_view path);

}  // namespace vizforge
