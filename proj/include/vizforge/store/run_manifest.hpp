// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "vizforge/common/io.hpp"

namespace vizforge {

struct StageCounters {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t retried = 0;
  friend bool operator==(const StageCounters&, const StageCounters&) = default;
};

struct StageCheckpoint {
  /// Last committed position; cursors are ordered keys and only advance.
  std::string cursor;
  bool done = false;
  friend bool operator==(const StageCheckpoint&, const StageCheckpoint&) = default;
};

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::map<std::string, StageCheckpoint> stage_checkpoints;
  std::map<std::string, StageCounters> counters;
  bool complete = false;
};

Json to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

/// An open run. Holds an exclusive lock on runs/<run_id>/lock for its
/// lifetime; the lock is released on destruction or process death.
class RunHandle {
 public:
  RunHandle(RunHandle&& other) noexcept;
  RunHandle& operator=(RunHandle&&) = delete;
  RunHandle(const RunHandle&) = delete;
  ~RunHandle();

  const RunManifest& manifest() const noexcept { return manifest_; }
  const std::string& run_id() const noexcept { return manifest_.run_id; }
  bool resumed() const noexcept { return resumed_; }

  const StageCheckpoint& checkpoint(const std::string& stage);
  StageCounters& counters(const std::string& stage);

  /// Advances the stage cursor and persists the manifest atomically.
  void commit_checkpoint(const std::string& stage, const std::string& cursor);
  void mark_stage_done(const std::string& stage);
  void mark_complete();
  void save();

  /// Called after every persisted checkpoint; lets tests simulate a crash at
  /// an exact point.
  void set_checkpoint_hook(std::function<void(const std::string& stage, const std::string& cursor)> hook) {
    hook_ = std::move(hook);
  }

 private:
  friend RunHandle open_run(const std::filesystem::path&, const Json&, const std::optional<std::string>&);
  RunHandle(std::filesystem::path dir, RunManifest manifest, int lock_fd, bool resumed);

  std::filesystem::path dir_;
  RunManifest manifest_;
  int lock_fd_ = -1;
  bool resumed_ = false;
  std::function<void(const std::string&, const std::string&)> hook_;
};

std::string config_hash(const Json& config);

/// Opens a run under `<store_root>/runs`. With an explicit `run_id` that run
/// is opened (created if absent; its config_hash must match). Otherwise the
/// newest incomplete run with the same config_hash is resumed, or a fresh
/// run_id is minted. Throws LockError when the run is already open.
RunHandle open_run(const std::filesystem::path& store_root, const Json& config,
                   const std::optional<std::string>& run_id = std::nullopt);

}  // namespace vizforge
