// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/store/corpus_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>

#include "vizforge/common/errors.hpp"
#include "vizforge/common/hash.hpp"

namespace vizforge {
namespace fs = std::filesystem;

namespace {

std::string errno_text() { return std::strerror(errno); }

void write_all(int fd, std::string_view data, const std::string& what) {
  std::size_t off = 0;
  while (off < data.size()) {
    const auto w = ::write(fd, data.data() + off, data.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw StorageError(what + ": " + errno_text());
    }
    off += static_cast<std::size_t>(w);
  }
}

int parse_shard_number(const fs::path& p) {
  const auto name = p.filename().string();
  if (name.size() != 17 || name.rfind("shard-", 0) != 0 || p.extension() != ".jsonl") return -1;
  try {
    return std::stoi(name.substr(6, 5));
  } catch (...) {
    return -1;
  }
}

}  // namespace

CorpusStore::CorpusStore(fs::path root, StoreOptions options) : root_(std::move(root)), options_(options) {
  std::error_code ec;
  for (const auto* sub : {"corpus", "artifacts", "rejects", "runs"}) {
    fs::create_directories(root_ / sub, ec);
    if (ec) throw StorageError("create " + (root_ / sub).string() + ": " + ec.message());
  }
  load_index();
}

CorpusStore::~CorpusStore() {
  if (active_fd_ >= 0) ::close(active_fd_);
}

fs::path CorpusStore::shard_path(int shard) const {
  char name[32];
  std::snprintf(name, sizeof(name), "shard-%05d.jsonl", shard);
  return root_ / "corpus" / name;
}

std::vector<fs::path> CorpusStore::shard_paths() const {
  std::vector<std::pair<int, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(root_ / "corpus")) {
    const int n = parse_shard_number(entry.path());
    if (n >= 0) found.emplace_back(n, entry.path());
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [n, p] : found) out.push_back(std::move(p));
  return out;
}

void CorpusStore::load_index() {
  int last_shard = 0;
  for (const auto& path : shard_paths()) {
    const int shard = parse_shard_number(path);
    last_shard = std::max(last_shard, shard);
    std::string data = read_file(path);
    // A process killed mid-append leaves a torn final line; drop it.
    if (!data.empty() && data.back() != '\n') {
      const auto last_nl = data.rfind('\n');
      const std::uint64_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
      std::cerr << "vizforge: truncating torn tail of " << path << " at byte " << keep << "\n";
      if (::truncate(path.c_str(), static_cast<off_t>(keep)) != 0) {
        throw StorageError("truncate " + path.string() + ": " + errno_text());
      }
      data.resize(keep);
    }
    std::uint64_t offset = 0;
    while (offset < data.size()) {
      const auto nl = data.find('\n', offset);
      const std::string_view line(data.data() + offset, nl - offset);
      Json j;
      try {
        j = Json::parse(line);
      } catch (const Json::parse_error& e) {
        throw CorruptionError(path.string() + " at byte " + std::to_string(offset) + ": " + e.what());
      }
      const auto id = j.at("record_id").get<std::string>();
      const int rev = j.at("revision").get<int>();
      auto& slot = index_[id];
      if (rev >= slot.revision) {
        slot = IndexEntry{shard,
                          offset,
                          static_cast<std::uint32_t>(line.size()),
                          rev,
                          parse_status(j.at("status").get<std::string>()).value_or(Status::kRaw),
                          j.at("lineage").at("generation_depth").get<int>()};
      }
      offset = nl + 1;
    }
  }
  open_active_shard(last_shard);
}

void CorpusStore::open_active_shard(int shard) {
  if (active_fd_ >= 0) ::close(active_fd_);
  const auto path = shard_path(shard);
  active_fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (active_fd_ < 0) throw StorageError("open " + path.string() + ": " + errno_text());
  struct stat st {};
  if (::fstat(active_fd_, &st) != 0) throw StorageError("stat " + path.string() + ": " + errno_text());
  active_shard_ = shard;
  active_size_ = static_cast<std::uint64_t>(st.st_size);
}

CorpusStore::IndexEntry CorpusStore::append_line(const std::string& line, const SampleRecord& r) {
  if (active_size_ > 0 && active_size_ + line.size() + 1 > options_.shard_roll_bytes) {
    open_active_shard(active_shard_ + 1);
  }
  IndexEntry e{active_shard_, active_size_, static_cast<std::uint32_t>(line.size()), r.revision, r.status,
               r.lineage.generation_depth};
  std::string buf = line;
  buf.push_back('\n');
  write_all(active_fd_, buf, "append " + shard_path(active_shard_).string());
  active_size_ += buf.size();
  return e;
}

std::string CorpusStore::read_line(const IndexEntry& e) const {
  const auto path = shard_path(e.shard);
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) throw StorageError("open " + path.string() + ": " + errno_text());
  std::string buf(e.length, '\0');
  std::size_t got = 0;
  while (got < buf.size()) {
    const auto r = ::pread(fd, buf.data() + got, buf.size() - got, static_cast<off_t>(e.offset + got));
    if (r <= 0) {
      if (r < 0 && errno == EINTR) continue;
      ::close(fd);
      throw CorruptionError("short read in " + path.string());
    }
    got += static_cast<std::size_t>(r);
  }
  ::close(fd);
  return buf;
}

StoreOutcome CorpusStore::store_record(SampleRecord record) {
  std::vector<std::string> diag;
  int depth = 0;
  {
    std::shared_lock lock(index_mu_);
    for (const auto& parent : record.lineage.parents) {
      const auto it = index_.find(parent);
      if (it == index_.end()) {
        diag.push_back("lineage.parents: unknown record " + parent);
        continue;
      }
      depth = std::max(depth, it->second.depth + 1);
    }
  }
  record.lineage.generation_depth = depth;
  record.revision = 0;
  record.record_id = compute_record_id(record);
  auto structural = check_record(record);
  diag.insert(diag.end(), structural.begin(), structural.end());
  if (!diag.empty()) throw RejectedRecordError(std::move(diag));

  const std::string line = canonical_dump(to_json(record));
  std::lock_guard commit(commit_mu_);
  {
    std::shared_lock lock(index_mu_);
    if (index_.contains(record.record_id)) return {record.record_id, false};
  }
  const auto entry = append_line(line, record);
  std::unique_lock lock(index_mu_);
  index_[record.record_id] = entry;
  return {record.record_id, true};
}

SampleRecord CorpusStore::supersede(SampleRecord updated) {
  std::lock_guard commit(commit_mu_);
  const auto latest = get(updated.record_id);
  if (!latest) throw NotFoundError("supersede: unknown record " + updated.record_id);
  if (compute_record_id(updated) != updated.record_id) {
    throw RejectedRecordError({"record_id: identity fields changed in supersede"});
  }
  updated.revision = latest->revision;
  updated.lineage = latest->lineage;
  if (updated == *latest) return *latest;
  updated.revision = latest->revision + 1;
  if (auto diag = check_record(updated); !diag.empty()) throw RejectedRecordError(std::move(diag));
  const auto entry = append_line(canonical_dump(to_json(updated)), updated);
  std::unique_lock lock(index_mu_);
  index_[updated.record_id] = entry;
  return updated;
}

std::optional<SampleRecord> CorpusStore::get(const std::string& record_id) const {
  IndexEntry e;
  {
    std::shared_lock lock(index_mu_);
    const auto it = index_.find(record_id);
    if (it == index_.end()) return std::nullopt;
    e = it->second;
  }
  return record_from_json(Json::parse(read_line(e)));
}

bool CorpusStore::contains(const std::string& record_id) const {
  std::shared_lock lock(index_mu_);
  return index_.contains(record_id);
}

std::vector<std::string> CorpusStore::record_ids(std::optional<Status> status) const {
  std::shared_lock lock(index_mu_);
  std::vector<std::string> out;
  for (const auto& [id, e] : index_) {
    if (!status || e.status == *status) out.push_back(id);
  }
  return out;
}

std::vector<SampleRecord> CorpusStore::records(std::optional<Status> status) const {
  std::vector<SampleRecord> out;
  for (const auto& id : record_ids(status)) {
    if (auto r = get(id)) out.push_back(std::move(*r));
  }
  return out;
}

std::size_t CorpusStore::size() const {
  std::shared_lock lock(index_mu_);
  return index_.size();
}

fs::path CorpusStore::artifact_path(const std::string& hash) const {
  return root_ / "artifacts" / hash.substr(0, 2) / hash.substr(2, 2) / hash;
}

std::string CorpusStore::put_artifact(std::string_view bytes, MediaKind kind, const std::string& created_by) {
  const std::string hash = sha256_hex(bytes);
  const auto path = artifact_path(hash);
  const auto meta_path = fs::path(path.string() + ".meta.json");
  std::error_code ec;
  if (fs::exists(path, ec) && fs::exists(meta_path, ec)) return hash;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw StorageError("create " + path.parent_path().string() + ": " + ec.message());
  write_file_atomic(path, bytes);
  const Json meta = {{"hash", hash},
                     {"media_kind", to_string(kind)},
                     {"byte_length", bytes.size()},
                     {"created_by", created_by}};
  if (!fs::exists(meta_path, ec)) write_file_atomic(meta_path, canonical_dump(meta));
  return hash;
}

std::optional<ArtifactInfo> CorpusStore::artifact_info(const std::string& hash) const {
  if (!is_sha256_hex(hash)) return std::nullopt;
  const auto meta_path = fs::path(artifact_path(hash).string() + ".meta.json");
  std::error_code ec;
  if (!fs::exists(meta_path, ec)) return std::nullopt;
  const auto j = Json::parse(read_file(meta_path));
  return ArtifactInfo{hash, parse_media_kind(j.at("media_kind").get<std::string>()).value_or(MediaKind::kLog),
                      j.at("byte_length").get<std::uint64_t>(), j.at("created_by").get<std::string>()};
}

ResolvedArtifact CorpusStore::resolve_artifact(const std::string& hash) const {
  const auto info = artifact_info(hash);
  std::error_code ec;
  if (!info || !fs::exists(artifact_path(hash), ec)) throw NotFoundError("artifact not found: " + hash);
  std::string bytes = read_file(artifact_path(hash));
  if (sha256_hex(bytes) != hash || bytes.size() != info->byte_length) {
    throw CorruptionError("artifact " + hash + " fails hash verification");
  }
  return ResolvedArtifact{std::move(bytes), info->media_kind};
}

void CorpusStore::append_reject(std::string_view stage, const Json& entry) {
  std::lock_guard commit(commit_mu_);
  const auto path = root_ / "rejects" / (std::string(stage) + ".jsonl");
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw StorageError("open " + path.string() + ": " + errno_text());
  try {
    write_all(fd, canonical_dump(entry) + "\n", "append " + path.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
}

std::string CorpusStore::corpus_digest() const {
  std::vector<IndexEntry> entries;
  {
    std::shared_lock lock(index_mu_);
    entries.reserve(index_.size());
    for (const auto& [id, e] : index_) entries.push_back(e);
  }
  std::vector<std::string> lines;
  lines.reserve(entries.size());
  for (const auto& e : entries) lines.push_back(read_line(e));
  std::sort(lines.begin(), lines.end());
  Sha256 h;
  for (const auto& l : lines) {
    h.update(l);
    h.update("\n");
  }
  return h.hex_digest();
}

void CorpusStore::sync() {
  std::lock_guard commit(commit_mu_);
  if (active_fd_ >= 0) ::fdatasync(active_fd_);
}

}  // namespace vizforge
