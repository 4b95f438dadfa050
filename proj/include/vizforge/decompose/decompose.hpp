// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vizforge/common/io.hpp"
#include "vizforge/decompose/python_ast.hpp"

namespace vizforge {

struct DecomposeProfile {
  std::vector<std::string> base_class_names{"Scene", "ThreeDScene"};
  std::string entry_method_name = "construct";
  /// fnmatch patterns tested against a module name and each dotted prefix.
  std::vector<std::string> import_denylist{"manim_imports_ext"};
  /// Calls whose positional arguments are animations.
  std::vector<std::string> play_names{"play"};
  std::string template_id = "animation-unit-v1";

  /// Throws ConfigError when base_class_names or entry_method_name is empty.
  void check() const;
};

Json to_json(const DecomposeProfile& p);
DecomposeProfile profile_from_json(const Json& j);

struct FeatureSet {
  std::vector<std::string> instantiated_objects;
  std::vector<std::string> invoked_animations;
  std::vector<std::string> text_literals;
  std::vector<std::string> imports;

  bool empty() const {
    return instantiated_objects.empty() && invoked_animations.empty() && text_literals.empty() && imports.empty();
  }
  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

struct SemanticUnit {
  std::string origin_record_id;
  std::string class_name;
  int start_line = 0;
  int end_line = 0;
  FeatureSet features;
  std::string excerpt;

  friend bool operator==(const SemanticUnit&, const SemanticUnit&) = default;
};

/// One JSONL entry: the unit fields plus schema_version and template_id.
Json to_json(const SemanticUnit& u, const std::string& template_id);

/// One unit per class that names a profile base directly (terminal name of
/// the base expression) and defines the entry method, in start_line order.
/// Classes are searched at module level, including inside module-level
/// if/try/with blocks. Each matching class without the entry method adds a
/// message to `warnings`. Throws ParseError on syntax errors.
std::vector<SemanticUnit> parse_units(std::string_view source_text, const DecomposeProfile& profile,
                                      const std::string& origin_record_id = "",
                                      std::vector<std::string>* warnings = nullptr);

/// Features of an entry-method body. `module_imports` are the file's
/// top-level import statements, which count toward the unit's imports.
FeatureSet extract_features(const std::vector<python::NodePtr>& unit_body, const DecomposeProfile& profile,
                            const std::vector<const python::Node*>& module_imports = {});

/// Lines [start_line, end_line] of `source`, each with its original line
/// terminator.
std::string source_lines(std::string_view source, int start_line, int end_line);

/// Grammar adapters keyed by language_tag. The Python adapter serves every
/// tag that starts with "python".
class GrammarAdapter {
 public:
  virtual ~GrammarAdapter() = default;
  virtual std::vector<SemanticUnit> parse_units(std::string_view source_text, const DecomposeProfile& profile,
                                                const std::string& origin_record_id,
                                                std::vector<std::string>* warnings) const = 0;
};

/// nullptr when no adapter handles `language_tag`.
const GrammarAdapter* adapter_for(std::string_view language_tag);

}  // namespace vizforge
