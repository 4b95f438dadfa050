// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vizforge/gateway/gateway.hpp"
#include "vizforge/store/record.hpp"
#include "vizforge/synthesis/matrix.hpp"

namespace vizforge {

struct SynthesisTask {
  std::string task_id;
  Strategy strategy = Strategy::kNone;
  std::vector<std::string> seed_record_ids;
  std::optional<std::string> concept_keyword;
  std::optional<SourceType> target_domain;
  /// Reverse instruction only.
  int snippet_lines = 0;
  std::uint64_t rng_seed = 0;
  int attempt = 0;
  std::optional<std::string> feedback;

  friend bool operator==(const SynthesisTask&, const SynthesisTask&) = default;
};

Json to_json(const SynthesisTask& t);
SynthesisTask task_from_json(const Json& j);

/// Diagnostics for violated task invariants; empty means valid.
std::vector<std::string> check_task(const SynthesisTask& task, SourceType seed_type, int max_retries);

/// Tasks for every marked (source, strategy) cell, ordered by task_id.
/// Only raw records are seeds. Throws PlanningError for a record whose
/// source type has no matrix row.
std::vector<SynthesisTask> plan_tasks(const MatrixConfig& matrix, const std::vector<SampleRecord>& records);

struct DraftPair {
  std::string instruction;
  std::string code;
  Lineage lineage;
  std::map<std::string, std::string> strategy_metadata;
  SourceType source_type = SourceType::kMatplotlib;
  std::string language_tag;
  std::vector<std::string> visual_refs;
};

/// Raw material for a new synthesized record; the store derives id and
/// depth.
SampleRecord to_record(const DraftPair& draft);

/// Non-blank line positions of `code`, 1-based.
std::vector<int> nonblank_lines(const std::string& code);

struct Snippet {
  int first_line = 0;  // 1-based, inclusive
  int last_line = 0;
  std::string text;
};

/// A contiguous run of the file holding exactly `k` non-blank lines, its
/// start drawn from `rng_seed`. Throws PreconditionError for k < 1 and
/// SnippetError when the file has fewer than k non-blank lines.
Snippet sample_snippet(const std::string& code, int k, std::uint64_t rng_seed);

/// Retry state threaded through the strategy operations.
struct AttemptContext {
  std::string task_id;
  int attempt = 0;
  std::optional<std::string> feedback;
};

struct SynthesisEvent {
  std::string kind;  // e.g. "recontext_code_overwritten"
  std::string task_id;
  std::string detail;
};

class Synthesizer {
 public:
  using EventSink = std::function<void(const SynthesisEvent&)>;

  Synthesizer(Gateway& gateway, const MatrixConfig& matrix, EventSink events = {});

  /// Throws PreconditionError (code-only seed, empty concept) or
  /// MalformedGenerationError.
  DraftPair evolve(const SampleRecord& seed, const std::string& keyword, const AttemptContext& ctx = {});
  /// The draft always carries the seed's code; an echoed instruction is a
  /// MalformedGenerationError.
  DraftPair recontextualize(const SampleRecord& seed, const AttemptContext& ctx = {});
  DraftPair reverse_instruct(const SampleRecord& ref, int k, std::uint64_t rng_seed, const AttemptContext& ctx = {});
  /// Throws EdgeError when neither (seed, target) nor (target, seed) is
  /// configured.
  DraftPair translate(const SampleRecord& seed, SourceType target, const AttemptContext& ctx = {});

  /// Dispatches on task.strategy. `seeds` holds the task's seed records in
  /// order.
  DraftPair run(const SynthesisTask& task, const std::vector<SampleRecord>& seeds);

 private:
  std::string complete(GatewayRequest request, const AttemptContext& ctx);
  void emit(const std::string& kind, const AttemptContext& ctx, const std::string& detail);
  std::string language_for(SourceType t, const std::string& tag) const;

  Gateway& gateway_;
  const MatrixConfig& matrix_;
  EventSink events_;
};

inline const std::string kProblemMarker = "[Problem Description]";
inline const std::string kCodeMarker = "[Code Solution]";

}  // namespace vizforge
