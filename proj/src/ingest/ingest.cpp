// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/ingest/ingest.hpp"

#include <glob.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vizforge/common/errors.hpp"

namespace vizforge {
namespace fs = std::filesystem;

namespace {

std::optional<std::string> text_field(const Json& item, const std::optional<std::string>& name) {
  if (!name || !item.is_object() || !item.contains(*name)) return std::nullopt;
  const auto& v = item.at(*name);
  if (!v.is_string()) return std::nullopt;
  return v.get<std::string>();
}

std::string item_key(std::size_t file_index, std::size_t line_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05zu:%09zu", file_index, line_index);
  return buf;
}

bool has_glob_chars(const std::string& s) { return s.find_first_of("*?[") != std::string::npos; }

}  // namespace

MediaKind media_kind_for_path(const std::string& path) {
  auto ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".mp4" || ext == ".webm" || ext == ".mov" || ext == ".mkv") return MediaKind::kVideo;
  if (ext == ".html" || ext == ".htm") return MediaKind::kHtmlSnapshot;
  if (ext == ".log" || ext == ".txt") return MediaKind::kLog;
  if (ext == ".xml" || ext == ".json") return MediaKind::kTestReport;
  return MediaKind::kImage;
}

Format classify_source(const Json& raw_item, const FieldMap& field_map) {
  if (!raw_item.is_object()) throw MalformedItemError("item is not a JSON object");
  if (!raw_item.contains(field_map.code)) throw MalformedItemError("missing code field '" + field_map.code + "'");
  const auto& code = raw_item.at(field_map.code);
  if (!code.is_string()) throw MalformedItemError("code field '" + field_map.code + "' is not text");
  if (trim(code.get<std::string>()).empty()) throw MalformedItemError("code field '" + field_map.code + "' is empty");
  const auto instruction = text_field(raw_item, field_map.instruction);
  return instruction && !trim(*instruction).empty() ? Format::kPaired : Format::kCodeOnly;
}

std::vector<std::string> resolve_locator(const std::string& locator) {
  if (!has_glob_chars(locator)) {
    std::error_code ec;
    if (!fs::is_regular_file(locator, ec)) throw SourceError("source locator not reachable: " + locator);
    return {locator};
  }
  const auto parent = fs::path(locator).parent_path();
  std::error_code ec;
  if (!parent.empty() && !has_glob_chars(parent.string()) && !fs::is_directory(parent, ec)) {
    throw SourceError("source directory not reachable: " + parent.string());
  }
  glob_t g{};
  const int rc = ::glob(locator.c_str(), GLOB_ERR, nullptr, &g);
  std::vector<std::string> out;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) {
      if (fs::is_regular_file(g.gl_pathv[i], ec)) out.emplace_back(g.gl_pathv[i]);
    }
  }
  ::globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw SourceError("cannot expand source locator: " + locator);
  std::sort(out.begin(), out.end());
  return out;
}

IngestStats ingest_batch(CorpusStore& store, const SourceDescriptor& source, const IngestOptions& options) {
  const auto files = resolve_locator(source.locator);
  IngestStats stats;

  auto reject = [&](const std::string& key, const std::string& file, const std::string& reason) {
    ++stats.malformed;
    store.append_reject("ingest", {{"source_type", to_string(source.source_type)},
                                   {"file", file},
                                   {"item_key", key},
                                   {"reason", reason}});
  };

  auto ingest_item = [&](const std::string& key, const std::string& file, const Json& item) {
    ++stats.seen;
    try {
      const Format format = classify_source(item, source.field_map);
      SampleRecord rec;
      rec.source_type = source.source_type;
      rec.format = format;
      rec.code = item.at(source.field_map.code).get<std::string>();
      if (format == Format::kPaired) rec.instruction = text_field(item, source.field_map.instruction);
      rec.language_tag = source.language_tag;
      if (source.field_map.visual && item.contains(*source.field_map.visual)) {
        const auto& v = item.at(*source.field_map.visual);
        std::vector<std::string> paths;
        if (v.is_string()) {
          paths.push_back(v.get<std::string>());
        } else if (v.is_array()) {
          for (const auto& p : v) {
            if (!p.is_string()) throw MalformedItemError("visual entry is not a path");
            paths.push_back(p.get<std::string>());
          }
        } else if (!v.is_null()) {
          throw MalformedItemError("visual field is neither a path nor a list of paths");
        }
        for (const auto& p : paths) {
          fs::path vp(p);
          if (vp.is_relative()) vp = fs::path(file).parent_path() / vp;
          std::string bytes;
          try {
            bytes = read_file(vp);
          } catch (const NotFoundError&) {
            throw MalformedItemError("visual file not found: " + vp.string());
          }
          rec.visual_refs.push_back(store.put_artifact(bytes, media_kind_for_path(vp.string()), options.created_by));
        }
      }
      const auto outcome = store.store_record(std::move(rec));
      if (outcome.inserted) {
        ++stats.stored;
      } else {
        ++stats.deduped;
      }
    } catch (const MalformedItemError& e) {
      reject(key, file, e.what());
    } catch (const RejectedRecordError& e) {
      reject(key, file, e.what());
    }
    if (options.on_item) options.on_item(key);
  };

  for (std::size_t fi = 0; fi < files.size(); ++fi) {
    const auto& file = files[fi];
    if (fs::path(file).extension() == ".jsonl") {
      std::ifstream in(file, std::ios::binary);
      if (!in) throw SourceError("cannot read " + file);
      std::string line;
      std::size_t li = 0;
      while (std::getline(in, line)) {
        const auto key = item_key(fi, li++);
        if (trim(line).empty()) continue;
        if (!options.start_after.empty() && key <= options.start_after) continue;
        Json item;
        try {
          item = Json::parse(line);
        } catch (const Json::parse_error& e) {
          ++stats.seen;
          reject(key, file, std::string("unparseable JSON: ") + e.what());
          if (options.on_item) options.on_item(key);
          continue;
        }
        ingest_item(key, file, item);
      }
    } else {
      const auto key = item_key(fi, 0);
      if (!options.start_after.empty() && key <= options.start_after) continue;
      Json item = {{source.field_map.code, read_file(file)}};
      if (!is_valid_utf8(item[source.field_map.code].get_ref<const std::string&>())) {
        ++stats.seen;
        reject(key, file, "code is not valid UTF-8");
        if (options.on_item) options.on_item(key);
        continue;
      }
      ingest_item(key, file, item);
    }
  }
  return stats;
}

}  // namespace vizforge
