// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vizforge {

using Json = nlohmann::json;

/// Compact, key-sorted, UTF-8 serialization. Throws on invalid UTF-8.
std::string canonical_dump(const Json& value);

bool is_valid_utf8(std::string_view s);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file + fsync + rename so readers never observe a
/// partially written document.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Reads a JSONL file; blank lines are skipped. Throws on a malformed line.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

/// Appends `line` plus a newline in one write and fsyncs. A torn final line
/// left by a crash is terminated first.
void append_line_durable(const std::filesystem::path& path, std::string_view line);

/// Reads an append-only journal: a missing file is empty and unparsable
/// lines (writes cut short by a crash) are skipped and counted in `torn`.
std::vector<Json> read_jsonl_journal(const std::filesystem::path& path, std::size_t* torn = nullptr);

/// Keeps only the last `limit` bytes of `text`, cutting at a UTF-8 boundary.
std::string tail_bytes(std::string_view text, std::size_t limit);

std::vector<std::string> split_lines(std::string_view text);

std::string trim(std::string_view s);

/// Deterministic generator seeded from arbitrary string material.
class SeededRng {
 public:
  explicit SeededRng(std::string_view material);
  /// Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);

 private:
  std::mt19937_64 engine_;
};

}  // namespace vizforge
