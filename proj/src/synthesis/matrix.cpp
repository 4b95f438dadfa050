// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/synthesis/matrix.hpp"

#include <algorithm>

#include "vizforge/common/errors.hpp"

namespace vizforge {
namespace {

const std::vector<std::string> kChartConcepts = {
    "grouped bar chart", "stacked area chart", "scatter plot with regression line", "box plot", "violin plot",
    "heatmap with annotations", "polar chart", "histogram with density curve", "pie chart", "error bars",
    "twin y axes", "small multiples",
};

const std::vector<std::string> kWebMetaTasks = {
    "add a heading", "add a button", "change an element's colour", "add a form input", "add a navigation bar",
    "reorder list items", "add a tooltip", "change the layout to two columns",
};

const std::vector<std::string> kMathConcepts = {
    "parametric curve", "vector field", "surface plot", "series expansion", "differential equation",
    "geometric construction", "probability distribution", "matrix transformation",
};

SourceRow make_row(SourceType t, std::string profile, bool vlm, std::set<Strategy> strategies,
                   std::vector<std::string> concepts, std::string tag) {
  SourceRow r;
  r.source_type = t;
  r.validation_profile = std::move(profile);
  r.vision_reward = vlm;
  r.strategies = std::move(strategies);
  r.concepts = std::move(concepts);
  r.language_tag = std::move(tag);
  return r;
}

}  // namespace

const SourceRow* MatrixConfig::row(SourceType t) const {
  auto it = rows.find(t);
  return it == rows.end() ? nullptr : &it->second;
}

bool MatrixConfig::edge_allowed(SourceType from, SourceType to) const {
  if (from == to) return false;
  return std::any_of(translation_edges.begin(), translation_edges.end(), [&](const auto& e) {
    return (e.first == from && e.second == to) || (e.first == to && e.second == from);
  });
}

std::vector<SourceType> MatrixConfig::translation_targets(SourceType from) const {
  std::set<SourceType> out;
  for (const auto& [a, b] : translation_edges) {
    if (a == from && b != from) out.insert(b);
    if (b == from && a != from) out.insert(a);
  }
  return {out.begin(), out.end()};
}

Rational MatrixConfig::threshold_for(SourceType t) const {
  const auto* r = row(t);
  return r != nullptr && r->threshold ? *r->threshold : default_threshold;
}

std::vector<std::pair<SourceType, SourceType>> default_translation_edges() {
  return {{SourceType::kAnimation, SourceType::kMathematica},
          {SourceType::kScientificPl, SourceType::kMathematica},
          {SourceType::kScientificPl, SourceType::kAnimation}};
}

MatrixConfig default_matrix() {
  using S = Strategy;
  using T = SourceType;
  const auto ge = S::kGuidedEvolution;
  const auto rc = S::kRecontextualization;
  const auto ri = S::kReverseInstruction;
  const auto bt = S::kBidirectionalTranslation;
  MatrixConfig m;
  for (auto row : {
           make_row(T::kMatplotlib, "python-viz", true, {ge, rc}, kChartConcepts, "python-matplotlib"),
           make_row(T::kCharts, "python-viz", true, {ge, rc}, kChartConcepts, "python-charts"),
           make_row(T::kAlgorithm, "test-runner", true, {ge}, {"dynamic programming", "graph search", "sorting"},
                    "python"),
           make_row(T::kMathematica, "wolfram-eval", false, {ge, ri, bt}, kMathConcepts, "wolfram"),
           make_row(T::kAnimation, "manim-render", true, {rc, bt}, {}, "python-manim"),
           make_row(T::kScientificPl, "none", false, {ge, rc, ri}, kMathConcepts, "scientific"),
           make_row(T::kSvg, "none", true, {rc}, {}, "svg"),
           make_row(T::kWebUi, "web-render", true, {ge}, kWebMetaTasks, "html"),
           make_row(T::kGeneralArtifact, "web-render", true, {ge, rc}, kWebMetaTasks, "html"),
           make_row(T::kScientificDemo, "web-render", true, {rc}, {}, "html"),
       }) {
    m.rows.emplace(row.source_type, std::move(row));
  }
  m.translation_edges = default_translation_edges();
  return m;
}

MatrixConfig matrix_from_json(const Json& j) {
  std::vector<std::string> bad;
  MatrixConfig m;
  m.translation_edges = default_translation_edges();
  if (!j.is_object()) throw ConfigError({"matrix (not an object)"});

  auto parse_threshold = [&](const Json& v, const std::string& key) -> std::optional<Rational> {
    try {
      if (v.is_string()) return Rational::parse(v.get<std::string>());
      if (v.is_number()) return Rational::parse(v.dump());
    } catch (const std::exception&) {
    }
    bad.push_back(key + " (not a number)");
    return std::nullopt;
  };

  for (const auto& [k, v] : j.items()) {
    if (k == "rows") continue;
    if (k == "translation_edges") {
      m.translation_edges.clear();
      if (!v.is_array()) {
        bad.push_back("matrix.translation_edges (not a list)");
        continue;
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& e = v[i];
        std::optional<SourceType> a, b;
        if (e.is_array() && e.size() == 2 && e[0].is_string() && e[1].is_string()) {
          a = parse_source_type(e[0].get<std::string>());
          b = parse_source_type(e[1].get<std::string>());
        }
        if (!a || !b || *a == *b) {
          bad.push_back("matrix.translation_edges[" + std::to_string(i) + "]");
          continue;
        }
        m.translation_edges.emplace_back(*a, *b);
      }
    } else if (k == "max_retries") {
      if (!v.is_number_integer() || v.get<int>() < 0) bad.push_back("matrix.max_retries");
      else m.max_retries = v.get<int>();
    } else if (k == "seed") {
      if (!v.is_number_unsigned()) bad.push_back("matrix.seed");
      else m.seed = v.get<std::uint64_t>();
    } else if (k == "reverse_k") {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer() ||
          v[0].get<int>() < 1 || v[1].get<int>() < v[0].get<int>()) {
        bad.push_back("matrix.reverse_k (expected [min, max] with 1 <= min <= max)");
      } else {
        m.reverse_k_min = v[0].get<int>();
        m.reverse_k_max = v[1].get<int>();
      }
    } else if (k == "reverse_use_context") {
      if (!v.is_boolean()) bad.push_back("matrix.reverse_use_context");
      else m.reverse_use_context = v.get<bool>();
    } else if (k == "threshold") {
      if (auto t = parse_threshold(v, "matrix.threshold")) m.default_threshold = *t;
    } else {
      bad.push_back("matrix." + k + " (unknown key)");
    }
  }

  const auto rows = j.find("rows");
  if (rows == j.end() || !rows->is_object() || rows->empty()) {
    bad.push_back("matrix.rows (missing or empty)");
  } else {
    for (const auto& [name, rj] : rows->items()) {
      const auto type = parse_source_type(name);
      const std::string base = "matrix.rows." + name;
      if (!type) {
        bad.push_back(base + " (unknown source type)");
        continue;
      }
      if (!rj.is_object()) {
        bad.push_back(base + " (not an object)");
        continue;
      }
      SourceRow row;
      row.source_type = *type;
      for (const auto& [k, v] : rj.items()) {
        const std::string key = base + "." + k;
        if (k == "validation") {
          if (!v.is_string() || v.get<std::string>().empty()) bad.push_back(key);
          else row.validation_profile = v.get<std::string>();
        } else if (k == "reward") {
          const auto s = v.is_string() ? v.get<std::string>() : "";
          if (s == "vlm") row.vision_reward = true;
          else if (s == "llm") row.vision_reward = false;
          else bad.push_back(key + " (expected \"vlm\" or \"llm\")");
        } else if (k == "strategies") {
          if (!v.is_array()) {
            bad.push_back(key + " (not a list)");
            continue;
          }
          for (const auto& s : v) {
            const auto st = s.is_string() ? parse_strategy(s.get<std::string>()) : std::nullopt;
            if (!st || *st == Strategy::kNone) bad.push_back(key + " (unknown strategy " + s.dump() + ")");
            else row.strategies.insert(*st);
          }
        } else if (k == "quotas") {
          if (!v.is_object()) {
            bad.push_back(key + " (not an object)");
            continue;
          }
          for (const auto& [sk, sv] : v.items()) {
            const auto st = parse_strategy(sk);
            if (!st || !sv.is_number_integer() || sv.get<int>() < 0) bad.push_back(key + "." + sk);
            else row.quotas[*st] = sv.get<int>();
          }
        } else if (k == "threshold") {
          row.threshold = parse_threshold(v, key);
        } else if (k == "concepts") {
          if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const Json& c) {
                return c.is_string() && !c.get<std::string>().empty();
              })) {
            bad.push_back(key + " (expected a list of non-empty strings)");
          } else {
            row.concepts = v.get<std::vector<std::string>>();
          }
        } else if (k == "language_tag") {
          if (!v.is_string()) bad.push_back(key);
          else row.language_tag = v.get<std::string>();
        } else {
          bad.push_back(key + " (unknown key)");
        }
      }
      for (const auto& [st, q] : row.quotas) {
        if (row.strategies.count(st) == 0) {
          bad.push_back(base + ".quotas." + std::string(to_string(st)) + " (strategy not marked)");
        }
      }
      if (row.strategies.count(Strategy::kGuidedEvolution) != 0 && row.concepts.empty()) {
        bad.push_back(base + ".concepts (required for guided_evolution)");
      }
      m.rows.emplace(*type, std::move(row));
    }
  }
  if (!bad.empty()) throw ConfigError(std::move(bad));
  return m;
}

Json to_json(const MatrixConfig& m) {
  Json rows = Json::object();
  for (const auto& [t, r] : m.rows) {
    Json strategies = Json::array();
    for (auto s : r.strategies) strategies.push_back(to_string(s));
    Json quotas = Json::object();
    for (const auto& [s, q] : r.quotas) quotas[std::string(to_string(s))] = q;
    Json row = {{"validation", r.validation_profile},
                {"reward", r.vision_reward ? "vlm" : "llm"},
                {"strategies", strategies},
                {"quotas", quotas},
                {"concepts", r.concepts},
                {"language_tag", r.language_tag}};
    if (r.threshold) row["threshold"] = r.threshold->to_string();
    rows[std::string(to_string(t))] = row;
  }
  Json edges = Json::array();
  for (const auto& [a, b] : m.translation_edges) edges.push_back({to_string(a), to_string(b)});
  return {{"rows", rows},
          {"translation_edges", edges},
          {"max_retries", m.max_retries},
          {"seed", m.seed},
          {"reverse_k", {m.reverse_k_min, m.reverse_k_max}},
          {"reverse_use_context", m.reverse_use_context},
          {"threshold", m.default_threshold.to_string()}};
}

}  // namespace vizforge
