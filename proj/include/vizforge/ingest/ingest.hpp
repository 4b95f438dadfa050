// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vizforge/store/corpus_store.hpp"

namespace vizforge {

/// Which raw fields feed instruction, code and visual. `code` is mandatory.
struct FieldMap {
  std::optional<std::string> instruction;
  std::string code = "code";
  std::optional<std::string> visual;
};

/// A configured source. `locator` is a file path or glob; `.jsonl` files
/// yield one item per line, any other file yields one code-only item whose
/// code is the file's content.
struct SourceDescriptor {
  SourceType source_type = SourceType::kMatplotlib;
  std::string locator;
  FieldMap field_map;
  std::string language_tag;
};

struct IngestStats {
  std::int64_t seen = 0;
  std::int64_t stored = 0;
  std::int64_t deduped = 0;
  std::int64_t malformed = 0;

  IngestStats& operator+=(const IngestStats& o) {
    seen += o.seen;
    stored += o.stored;
    deduped += o.deduped;
    malformed += o.malformed;
    return *this;
  }
  friend bool operator==(const IngestStats&, const IngestStats&) = default;
};

/// Paired iff the mapped instruction is present and non-empty. Throws
/// MalformedItemError when the mapped code is missing, empty or not text.
Format classify_source(const Json& raw_item, const FieldMap& field_map);

struct IngestOptions {
  /// Items with key <= start_after are skipped (resume).
  std::string start_after;
  /// Invoked after each item is committed (stored, deduped or rejected).
  std::function<void(const std::string& item_key)> on_item;
  std::string created_by = "ingest";
};

/// Classifies, validates and stores every item of `source`. Per-item
/// failures are quarantined to rejects/ingest.jsonl and counted; an
/// unreachable locator throws SourceError.
IngestStats ingest_batch(CorpusStore& store, const SourceDescriptor& source, const IngestOptions& options = {});

/// Files a locator resolves to, sorted. Throws SourceError when the locator's
/// directory does not exist or a plain path is missing.
std::vector<std::string> resolve_locator(const std::string& locator);

MediaKind media_kind_for_path(const std::string& path);

}  // namespace vizforge
