// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "vizforge/store/record.hpp"

namespace vizforge {

struct StoreOptions {
  std::uint64_t shard_roll_bytes = 64ULL << 20;
};

struct ArtifactInfo {
  std::string hash;
  MediaKind media_kind = MediaKind::kImage;
  std::uint64_t byte_length = 0;
  std::string created_by;
};

struct ResolvedArtifact {
  std::string bytes;
  MediaKind media_kind = MediaKind::kImage;
};

struct StoreOutcome {
  std::string record_id;
  bool inserted = false;
};

/// Durable, append-only, content-addressed storage for records and artifacts.
///
/// Layout under `root`:
///   corpus/shard-NNNNN.jsonl   one record revision per line (canonical JSON)
///   artifacts/ab/cd/<hash>     artifact bytes, plus <hash>.meta.json
///   rejects/<stage>.jsonl      quarantined inputs with reasons
///   runs/<run_id>/             manifest.json + lock
///
/// Record writes are serialized through one committer; reads take a shared
/// lock. Artifact puts are lock-free (temp file + rename of identical bytes).
/// One writing process per store root.
class CorpusStore {
 public:
  explicit CorpusStore(std::filesystem::path root, StoreOptions options = {});
  ~CorpusStore();
  CorpusStore(const CorpusStore&) = delete;
  CorpusStore& operator=(const CorpusStore&) = delete;

  const std::filesystem::path& root() const noexcept { return root_; }

  /// Validates and appends `record` as revision 0. record_id and
  /// lineage.generation_depth are derived here; parents must already exist.
  /// Identical content returns the existing id without writing.
  StoreOutcome store_record(SampleRecord record);

  /// Appends a superseding revision (status transition, attached scores).
  /// Identity fields must be unchanged. Returns the stored version; when the
  /// update equals the latest revision nothing is written.
  SampleRecord supersede(SampleRecord updated);

  std::optional<SampleRecord> get(const std::string& record_id) const;
  bool contains(const std::string& record_id) const;

  /// Latest revision of every record, optionally filtered by status, ordered
  /// by record_id.
  std::vector<SampleRecord> records(std::optional<Status> status = std::nullopt) const;
  std::vector<std::string> record_ids(std::optional<Status> status = std::nullopt) const;
  std::size_t size() const;

  std::string put_artifact(std::string_view bytes, MediaKind kind, const std::string& created_by);
  /// Returns exact stored bytes after re-verifying the hash.
  ResolvedArtifact resolve_artifact(const std::string& hash) const;
  std::optional<ArtifactInfo> artifact_info(const std::string& hash) const;
  std::filesystem::path artifact_path(const std::string& hash) const;

  void append_reject(std::string_view stage, const Json& entry);

  /// SHA-256 over the sorted canonical lines of every record's latest
  /// revision. Independent of shard layout and commit order.
  std::string corpus_digest() const;

  std::vector<std::filesystem::path> shard_paths() const;

  /// fdatasync of the active shard.
  void sync();

 private:
  struct IndexEntry {
    int shard = 0;
    std::uint64_t offset = 0;
    std::uint32_t length = 0;
    int revision = 0;
    Status status = Status::kRaw;
    int depth = 0;
  };

  void load_index();
  std::string read_line(const IndexEntry& e) const;
  IndexEntry append_line(const std::string& line, const SampleRecord& r);
  void open_active_shard(int shard);
  std::filesystem::path shard_path(int shard) const;

  std::filesystem::path root_;
  StoreOptions options_;

  mutable std::shared_mutex index_mu_;
  std::map<std::string, IndexEntry> index_;

  std::mutex commit_mu_;
  int active_shard_ = 0;
  int active_fd_ = -1;
  std::uint64_t active_size_ = 0;
};

}  // namespace vizforge
