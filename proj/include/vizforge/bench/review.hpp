// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vizforge/common/io.hpp"
#include "vizforge/common/rational.hpp"
#include "vizforge/store/corpus_store.hpp"

namespace vizforge {

enum class ReviewKind { kBenchFaith, kRewardSpotcheck };
std::string_view to_string(ReviewKind k);
std::optional<ReviewKind> parse_review_kind(std::string_view s);

struct ReviewItem {
  std::string item_id;
  ReviewKind kind = ReviewKind::kBenchFaith;
  /// Bench task id or corpus record id the item is about.
  std::string subject_id;
  std::vector<std::string> media;  // artifact hashes
  std::string instruction;
};

/// Deterministic id for the item reviewing `subject_id`.
std::string review_item_id(ReviewKind kind, const std::string& subject_id);

struct ReviewSubmission {
  std::string item_id;
  std::string annotator_id;
  int score = 0;
  std::optional<std::string> comment;
  std::int64_t seq = 0;
};

struct ReviewConfig {
  std::set<std::string> annotators;
  /// Submissions needed before an item counts as scored; their mean is the
  /// item's score.
  int quorum = 1;
};

struct SubmitResult {
  ReviewSubmission stored;
  /// True when the annotator had already scored this item and the stored
  /// submission was returned unchanged.
  bool replay = false;
};

/// Items and submissions kept as append-only journals under `dir`:
/// items.jsonl, scores.jsonl and conflicts.jsonl.
class ReviewStore {
 public:
  ReviewStore(std::filesystem::path dir, ReviewConfig config);

  /// Adds the item unless one with the same id exists. Returns whether it
  /// was added.
  bool add_item(ReviewItem item);

  /// Pending items this annotator has not scored, oldest first. Throws
  /// ReviewError(kAuth) for an unknown annotator.
  std::vector<ReviewItem> queue(const std::string& annotator, std::optional<ReviewKind> kind = std::nullopt) const;

  /// First submission per (item, annotator) wins; a later one returns the
  /// stored submission and, when it differs, is logged as a conflict.
  /// Errors: kAuth unknown annotator, kNotFound unknown item, kValidation
  /// score not an integer in [1, 5] or comment not a string, kConflict item
  /// already scored by others.
  SubmitResult submit(const std::string& item_id, const std::string& annotator, const Json& score,
                      const Json& comment = nullptr);

  const ReviewItem* item(const std::string& item_id) const;
  bool scored(const std::string& item_id) const;
  std::vector<ReviewSubmission> submissions(const std::string& item_id) const;

  /// Mean of the first `quorum` submissions for the item about
  /// `subject_id`; absent until the quorum is reached.
  std::optional<Rational> item_score(ReviewKind kind, const std::string& subject_id) const;

  bool is_annotator(const std::string& id) const { return config_.annotators.count(id) > 0; }
  std::int64_t conflicts_logged() const;

 private:
  bool scored_locked(const std::string& item_id) const;

  std::filesystem::path dir_;
  ReviewConfig config_;
  mutable std::mutex mu_;
  std::vector<ReviewItem> items_;  // insertion order = age
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::vector<ReviewSubmission>> subs_;
  std::int64_t seq_ = 0;
  std::int64_t conflicts_ = 0;
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Review API routing, independent of any HTTP library:
///   GET  /api/queue?annotator=&kind=
///   GET  /api/item/{id}/media[?index=n]
///   POST /api/item/{id}/score   {"score": int, "comment"?: string}
/// The annotator of a POST comes from the `annotator` query parameter or
/// the X-Annotator header. Errors reply {"error": "..."}.
HttpReply handle_review_request(ReviewStore& store, const CorpusStore* artifacts, const std::string& method,
                                const std::string& path, const std::map<std::string, std::string>& query,
                                const std::map<std::string, std::string>& headers, const std::string& body);

/// Serves the review API over HTTP, plus an optional static UI directory.
class ReviewServer {
 public:
  ReviewServer(ReviewStore& store, const CorpusStore* artifacts, std::optional<std::filesystem::path> static_dir = {});
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds; port 0 picks a free one. Returns the bound port. Throws
  /// StorageError when binding fails.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vizforge
