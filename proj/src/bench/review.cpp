// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/bench/review.hpp"

#include <algorithm>

#include "vizforge/common/errors.hpp"
#include "vizforge/common/hash.hpp"

namespace vizforge {
namespace {

Json item_json(const ReviewItem& i) {
  return {{"item_id", i.item_id},
          {"kind", to_string(i.kind)},
          {"subject_id", i.subject_id},
          {"media", i.media},
          {"instruction", i.instruction}};
}

Json submission_json(const ReviewSubmission& s) {
  return {{"item_id", s.item_id},
          {"annotator_id", s.annotator_id},
          {"score", s.score},
          {"comment", s.comment ? Json(*s.comment) : Json(nullptr)},
          {"seq", s.seq}};
}

std::string sniff_content_type(const std::string& bytes, MediaKind kind) {
  auto starts = [&](std::string_view p) { return bytes.compare(0, p.size(), p) == 0; };
  if (starts("\x89PNG")) return "image/png";
  if (starts("\xFF\xD8\xFF")) return "image/jpeg";
  if (starts("GIF8")) return "image/gif";
  if (bytes.size() > 12 && bytes.compare(4, 4, "ftyp") == 0) return "video/mp4";
  if (starts("\x1A\x45\xDF\xA3")) return "video/webm";
  if (bytes.find("<svg") != std::string::npos && bytes.find("<svg") < 512) return "image/svg+xml";
  if (kind == MediaKind::kHtmlSnapshot) return "text/html";
  if (kind == MediaKind::kLog || kind == MediaKind::kTestReport) return "text/plain";
  return "application/octet-stream";
}

HttpReply error_reply(int status, const std::string& message) {
  return {status, "application/json", Json{{"error", message}}.dump()};
}

int status_for(ReviewError::Kind k) {
  switch (k) {
    case ReviewError::Kind::kValidation: return 400;
    case ReviewError::Kind::kAuth: return 401;
    case ReviewError::Kind::kNotFound: return 404;
    case ReviewError::Kind::kConflict: return 409;
  }
  return 500;
}

}  // namespace

std::string_view to_string(ReviewKind k) { return k == ReviewKind::kBenchFaith ? "bench_faith" : "reward_spotcheck"; }

std::optional<ReviewKind> parse_review_kind(std::string_view s) {
  if (s == "bench_faith") return ReviewKind::kBenchFaith;
  if (s == "reward_spotcheck") return ReviewKind::kRewardSpotcheck;
  return std::nullopt;
}

std::string review_item_id(ReviewKind kind, const std::string& subject_id) {
  return sha256_hex(std::string(to_string(kind)) + "\n" + subject_id).substr(0, 16);
}

ReviewStore::ReviewStore(std::filesystem::path dir, ReviewConfig config) : dir_(std::move(dir)), config_(std::move(config)) {
  if (config_.quorum < 1) throw ConfigError({"review.quorum (must be >= 1)"});
  std::filesystem::create_directories(dir_);
  for (const auto& j : read_jsonl_journal(dir_ / "items.jsonl")) {
    ReviewItem i;
    i.item_id = j.at("item_id").get<std::string>();
    i.kind = parse_review_kind(j.at("kind").get<std::string>()).value();
    i.subject_id = j.at("subject_id").get<std::string>();
    i.media = j.at("media").get<std::vector<std::string>>();
    i.instruction = j.at("instruction").get<std::string>();
    if (index_.emplace(i.item_id, items_.size()).second) items_.push_back(std::move(i));
  }
  for (const auto& j : read_jsonl_journal(dir_ / "scores.jsonl")) {
    ReviewSubmission s;
    s.item_id = j.at("item_id").get<std::string>();
    s.annotator_id = j.at("annotator_id").get<std::string>();
    s.score = j.at("score").get<int>();
    if (j.contains("comment") && j["comment"].is_string()) s.comment = j["comment"].get<std::string>();
    s.seq = j.at("seq").get<std::int64_t>();
    seq_ = std::max(seq_, s.seq);
    subs_[s.item_id].push_back(std::move(s));
  }
  conflicts_ = static_cast<std::int64_t>(read_jsonl_journal(dir_ / "conflicts.jsonl").size());
}

bool ReviewStore::add_item(ReviewItem item) {
  if (item.item_id.empty()) item.item_id = review_item_id(item.kind, item.subject_id);
  std::lock_guard lock(mu_);
  if (index_.count(item.item_id)) return false;
  append_line_durable(dir_ / "items.jsonl", canonical_dump(item_json(item)));
  index_.emplace(item.item_id, items_.size());
  items_.push_back(std::move(item));
  return true;
}

bool ReviewStore::scored_locked(const std::string& item_id) const {
  const auto it = subs_.find(item_id);
  return it != subs_.end() && static_cast<int>(it->second.size()) >= config_.quorum;
}

std::vector<ReviewItem> ReviewStore::queue(const std::string& annotator, std::optional<ReviewKind> kind) const {
  if (!is_annotator(annotator)) throw ReviewError(ReviewError::Kind::kAuth, "unknown annotator " + annotator);
  std::lock_guard lock(mu_);
  std::vector<ReviewItem> out;
  for (const auto& i : items_) {
    if (kind && i.kind != *kind) continue;
    if (scored_locked(i.item_id)) continue;
    const auto it = subs_.find(i.item_id);
    const bool mine = it != subs_.end() && std::any_of(it->second.begin(), it->second.end(), [&](const auto& s) {
                        return s.annotator_id == annotator;
                      });
    if (!mine) out.push_back(i);
  }
  return out;
}

SubmitResult ReviewStore::submit(const std::string& item_id, const std::string& annotator, const Json& score,
                                 const Json& comment) {
  if (!is_annotator(annotator)) throw ReviewError(ReviewError::Kind::kAuth, "unknown annotator " + annotator);
  if (!score.is_number_integer()) {
    throw ReviewError(ReviewError::Kind::kValidation, "score must be an integer from 1 to 5");
  }
  const auto value = score.get<std::int64_t>();
  if (value < 1 || value > 5) {
    throw ReviewError(ReviewError::Kind::kValidation, "score " + std::to_string(value) + " outside 1..5");
  }
  if (!comment.is_null() && !comment.is_string()) {
    throw ReviewError(ReviewError::Kind::kValidation, "comment must be a string");
  }
  std::lock_guard lock(mu_);
  if (!index_.count(item_id)) throw ReviewError(ReviewError::Kind::kNotFound, "unknown item " + item_id);
  auto& subs = subs_[item_id];
  for (const auto& s : subs) {
    if (s.annotator_id != annotator) continue;
    const auto new_comment = comment.is_string() ? std::optional<std::string>(comment.get<std::string>()) : std::nullopt;
    if (s.score != value || s.comment != new_comment) {
      append_line_durable(dir_ / "conflicts.jsonl",
                          canonical_dump({{"item_id", item_id},
                                          {"annotator_id", annotator},
                                          {"stored_score", s.score},
                                          {"rejected_score", value},
                                          {"rejected_comment", comment}}));
      ++conflicts_;
    }
    return {s, true};
  }
  if (static_cast<int>(subs.size()) >= config_.quorum) {
    throw ReviewError(ReviewError::Kind::kConflict, "item " + item_id + " is already scored");
  }
  ReviewSubmission s;
  s.item_id = item_id;
  s.annotator_id = annotator;
  s.score = static_cast<int>(value);
  if (comment.is_string()) s.comment = comment.get<std::string>();
  s.seq = seq_ + 1;
  append_line_durable(dir_ / "scores.jsonl", canonical_dump(submission_json(s)));
  seq_ = s.seq;
  subs.push_back(s);
  return {s, false};
}

const ReviewItem* ReviewStore::item(const std::string& item_id) const {
  std::lock_guard lock(mu_);
  const auto it = index_.find(item_id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

bool ReviewStore::scored(const std::string& item_id) const {
  std::lock_guard lock(mu_);
  return scored_locked(item_id);
}

std::vector<ReviewSubmission> ReviewStore::submissions(const std::string& item_id) const {
  std::lock_guard lock(mu_);
  const auto it = subs_.find(item_id);
  return it == subs_.end() ? std::vector<ReviewSubmission>{} : it->second;
}

std::optional<Rational> ReviewStore::item_score(ReviewKind kind, const std::string& subject_id) const {
  const auto id = review_item_id(kind, subject_id);
  std::lock_guard lock(mu_);
  if (!scored_locked(id)) return std::nullopt;
  const auto& subs = subs_.at(id);
  std::int64_t sum = 0;
  for (int i = 0; i < config_.quorum; ++i) sum += subs[static_cast<std::size_t>(i)].score;
  return Rational(sum, config_.quorum);
}

std::int64_t ReviewStore::conflicts_logged() const {
  std::lock_guard lock(mu_);
  return conflicts_;
}

HttpReply handle_review_request(ReviewStore& store, const CorpusStore* artifacts, const std::string& method,
                                const std::string& path, const std::map<std::string, std::string>& query,
                                const std::map<std::string, std::string>& headers, const std::string& body) {
  auto param = [&](const std::string& k) -> std::string {
    const auto it = query.find(k);
    return it == query.end() ? std::string() : it->second;
  };
  try {
    if (path == "/api/queue") {
      if (method != "GET") return error_reply(405, "method not allowed");
      std::optional<ReviewKind> kind;
      if (const auto k = param("kind"); !k.empty()) {
        kind = parse_review_kind(k);
        if (!kind) return error_reply(400, "unknown kind " + k);
      }
      Json out = Json::array();
      for (const auto& i : store.queue(param("annotator"), kind)) {
        auto j = item_json(i);
        j["status"] = "pending";
        out.push_back(std::move(j));
      }
      return {200, "application/json", out.dump()};
    }

    static const std::string kItem = "/api/item/";
    if (path.rfind(kItem, 0) != 0) return error_reply(404, "no route for " + path);
    const auto rest = path.substr(kItem.size());
    const auto slash = rest.find('/');
    if (slash == std::string::npos) return error_reply(404, "no route for " + path);
    const auto id = rest.substr(0, slash);
    const auto action = rest.substr(slash + 1);

    if (action == "media") {
      if (method != "GET") return error_reply(405, "method not allowed");
      const auto* it = store.item(id);
      if (!it) return error_reply(404, "unknown item " + id);
      std::size_t index = 0;
      if (const auto s = param("index"); !s.empty()) {
        try {
          index = std::stoul(s);
        } catch (const std::exception&) {
          return error_reply(400, "index must be a non-negative integer");
        }
      }
      if (index >= it->media.size()) return error_reply(404, "item " + id + " has no media at index " + std::to_string(index));
      if (!artifacts) return error_reply(404, "artifact store unavailable");
      const auto art = artifacts->resolve_artifact(it->media[index]);
      return {200, sniff_content_type(art.bytes, art.media_kind), art.bytes};
    }

    if (action == "score") {
      if (method != "POST") return error_reply(405, "method not allowed");
      std::string annotator = param("annotator");
      if (annotator.empty()) {
        for (const auto& [k, v] : headers) {
          std::string lower = k;
          std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
          if (lower == "x-annotator") annotator = v;
        }
      }
      if (!store.is_annotator(annotator)) return error_reply(401, "unknown annotator " + annotator);
      Json payload;
      try {
        payload = Json::parse(body);
      } catch (const Json::parse_error&) {
        return error_reply(400, "body must be a JSON object");
      }
      if (!payload.is_object() || !payload.contains("score")) return error_reply(400, "body needs a score");
      for (const auto& [k, v] : payload.items()) {
        if (k != "score" && k != "comment") return error_reply(400, "unexpected field " + k);
      }
      const auto r = store.submit(id, annotator, payload["score"], payload.value("comment", Json(nullptr)));
      Json out = submission_json(r.stored);
      out["status"] = store.scored(id) ? "scored" : "pending";
      out["replay"] = r.replay;
      return {200, "application/json", out.dump()};
    }
    return error_reply(404, "no route for " + path);
  } catch (const ReviewError& e) {
    return error_reply(status_for(e.kind()), e.what());
  } catch (const NotFoundError& e) {
    return error_reply(404, e.what());
  } catch (const CorruptionError& e) {
    return error_reply(500, e.what());
  }
}

}  // namespace vizforge
