// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vizforge/common/io.hpp"
#include "vizforge/common/rational.hpp"
#include "vizforge/store/record.hpp"

namespace vizforge {

/// One row of the source matrix: how records of a source type are validated,
/// judged and synthesized.
struct SourceRow {
  SourceType source_type = SourceType::kMatplotlib;
  /// Sandbox profile id; "none" skips execution.
  std::string validation_profile = "none";
  /// true: vision judge when a visual is available; false: text judge only.
  bool vision_reward = false;
  std::set<Strategy> strategies;
  /// Maximum tasks per (source, strategy) cell; absent means unlimited.
  std::map<Strategy, int> quotas;
  std::optional<Rational> threshold;
  /// Keyword / meta-task pool for guided evolution.
  std::vector<std::string> concepts;
  std::string language_tag;
};

struct MatrixConfig {
  std::map<SourceType, SourceRow> rows;
  /// Directed edges as configured; the reverse of each is also accepted.
  std::vector<std::pair<SourceType, SourceType>> translation_edges;
  int max_retries = 3;
  std::uint64_t seed = 0;
  int reverse_k_min = 10;
  int reverse_k_max = 40;
  bool reverse_use_context = true;
  Rational default_threshold{4};

  const SourceRow* row(SourceType t) const;
  bool edge_allowed(SourceType from, SourceType to) const;
  /// Every configured target reachable from `from` in either direction,
  /// sorted and deduplicated.
  std::vector<SourceType> translation_targets(SourceType from) const;
  Rational threshold_for(SourceType t) const;
};

/// The routing of the published source table, with no concept pools.
MatrixConfig default_matrix();
std::vector<std::pair<SourceType, SourceType>> default_translation_edges();

/// Parses the "matrix" section of a pipeline config. Throws ConfigError
/// naming every offending key.
MatrixConfig matrix_from_json(const Json& j);
Json to_json(const MatrixConfig& m);

}  // namespace vizforge
