// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/store/run_manifest.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <vector>

#include "vizforge/common/errors.hpp"
#include "vizforge/common/hash.hpp"

namespace vizforge {
namespace fs = std::filesystem;

Json to_json(const RunManifest& m) {
  Json checkpoints = Json::object();
  for (const auto& [stage, cp] : m.stage_checkpoints) {
    checkpoints[stage] = {{"cursor", cp.cursor}, {"done", cp.done}};
  }
  Json counters = Json::object();
  for (const auto& [stage, c] : m.counters) {
    counters[stage] = {{"accepted", c.accepted}, {"rejected", c.rejected}, {"retried", c.retried}};
  }
  return {{"run_id", m.run_id},
          {"config_hash", m.config_hash},
          {"stage_checkpoints", checkpoints},
          {"counters", counters},
          {"complete", m.complete}};
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& [stage, cp] : j.at("stage_checkpoints").items()) {
    m.stage_checkpoints[stage] = {cp.at("cursor").get<std::string>(), cp.at("done").get<bool>()};
  }
  for (const auto& [stage, c] : j.at("counters").items()) {
    m.counters[stage] = {c.at("accepted").get<std::int64_t>(), c.at("rejected").get<std::int64_t>(),
                         c.at("retried").get<std::int64_t>()};
  }
  m.complete = j.at("complete").get<bool>();
  return m;
}

std::string config_hash(const Json& config) { return sha256_hex(canonical_dump(config)); }

RunHandle::RunHandle(fs::path dir, RunManifest manifest, int lock_fd, bool resumed)
    : dir_(std::move(dir)), manifest_(std::move(manifest)), lock_fd_(lock_fd), resumed_(resumed) {}

RunHandle::RunHandle(RunHandle&& other) noexcept
    : dir_(std::move(other.dir_)),
      manifest_(std::move(other.manifest_)),
      lock_fd_(std::exchange(other.lock_fd_, -1)),
      resumed_(other.resumed_),
      hook_(std::move(other.hook_)) {}

RunHandle::~RunHandle() {
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

const StageCheckpoint& RunHandle::checkpoint(const std::string& stage) { return manifest_.stage_checkpoints[stage]; }

StageCounters& RunHandle::counters(const std::string& stage) { return manifest_.counters[stage]; }

void RunHandle::commit_checkpoint(const std::string& stage, const std::string& cursor) {
  auto& cp = manifest_.stage_checkpoints[stage];
  if (cp.done) throw Error("checkpoint after stage '" + stage + "' finished");
  if (!cp.cursor.empty() && cursor < cp.cursor) {
    throw Error("checkpoint for stage '" + stage + "' moved backwards: " + cursor + " < " + cp.cursor);
  }
  cp.cursor = cursor;
  save();
  if (hook_) hook_(stage, cursor);
}

void RunHandle::mark_stage_done(const std::string& stage) {
  manifest_.stage_checkpoints[stage].done = true;
  save();
}

void RunHandle::mark_complete() {
  manifest_.complete = true;
  save();
}

void RunHandle::save() { write_file_atomic(dir_ / "manifest.json", to_json(manifest_).dump(2) + "\n"); }

namespace {

int lock_run_dir(const fs::path& dir, const std::string& run_id) {
  const auto path = dir / "lock";
  const int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw StorageError("open " + path.string() + ": " + std::strerror(errno));
  if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd);
    throw LockError("run " + run_id + " is already open by another handle");
  }
  return fd;
}

struct ExistingRun {
  std::string run_id;
  RunManifest manifest;
};

std::vector<ExistingRun> scan_runs(const fs::path& runs_dir) {
  std::vector<ExistingRun> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(runs_dir, ec)) {
    const auto manifest_path = entry.path() / "manifest.json";
    if (!fs::exists(manifest_path)) continue;
    try {
      auto m = manifest_from_json(Json::parse(read_file(manifest_path)));
      out.push_back({entry.path().filename().string(), std::move(m)});
    } catch (const std::exception&) {
      throw CorruptionError("unreadable run manifest " + manifest_path.string());
    }
  }
  return out;
}

int run_sequence(const std::string& run_id) {
  const auto dash = run_id.rfind('-');
  if (dash == std::string::npos) return 0;
  try {
    return std::stoi(run_id.substr(dash + 1));
  } catch (...) {
    return 0;
  }
}

}  // namespace

RunHandle open_run(const fs::path& store_root, const Json& config, const std::optional<std::string>& run_id) {
  const auto runs_dir = store_root / "runs";
  fs::create_directories(runs_dir);
  const std::string hash = config_hash(config);
  const auto existing = scan_runs(runs_dir);

  auto open_existing = [&](const ExistingRun& run) {
    const auto dir = runs_dir / run.run_id;
    const int fd = lock_run_dir(dir, run.run_id);
    // Re-read under the lock; a previous holder may have advanced it.
    auto manifest = manifest_from_json(Json::parse(read_file(dir / "manifest.json")));
    return RunHandle(dir, std::move(manifest), fd, /*resumed=*/true);
  };
  auto create = [&](const std::string& id) {
    const auto dir = runs_dir / id;
    fs::create_directories(dir);
    const int fd = lock_run_dir(dir, id);
    RunManifest m;
    m.run_id = id;
    m.config_hash = hash;
    RunHandle handle(dir, std::move(m), fd, /*resumed=*/false);
    handle.save();
    return handle;
  };

  if (run_id) {
    for (const auto& run : existing) {
      if (run.run_id != *run_id) continue;
      if (run.manifest.config_hash != hash) {
        throw ConfigError({"run " + *run_id + " was created with a different config (config_hash mismatch)"});
      }
      return open_existing(run);
    }
    return create(*run_id);
  }

  const ExistingRun* newest = nullptr;
  int max_seq = 0;
  const std::string prefix = "run-" + hash.substr(0, 12) + "-";
  for (const auto& run : existing) {
    if (run.run_id.rfind(prefix, 0) == 0) max_seq = std::max(max_seq, run_sequence(run.run_id));
    if (run.manifest.config_hash != hash || run.manifest.complete) continue;
    if (newest == nullptr || run_sequence(run.run_id) > run_sequence(newest->run_id)) newest = &run;
  }
  if (newest != nullptr) return open_existing(*newest);
  return create(prefix + std::to_string(max_seq + 1));
}

}  // namespace vizforge
