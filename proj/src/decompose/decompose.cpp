// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/decompose/decompose.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cctype>
#include <set>

#include "vizforge/common/errors.hpp"

namespace vizforge {

using python::Node;
using python::NodeKind;

namespace {

void collect_problems(const DecomposeProfile& p, std::vector<std::string>& bad) {
  if (p.base_class_names.empty()) bad.push_back("base_class_names (must be non-empty)");
  for (const auto& b : p.base_class_names) {
    if (b.empty()) bad.push_back("base_class_names (empty name)");
  }
  if (p.entry_method_name.empty()) bad.push_back("entry_method_name (must be non-empty)");
}

}  // namespace

void DecomposeProfile::check() const {
  std::vector<std::string> bad;
  collect_problems(*this, bad);
  if (!bad.empty()) throw ConfigError(bad);
}

Json to_json(const DecomposeProfile& p) {
  return Json{{"base_class_names", p.base_class_names},
              {"entry_method_name", p.entry_method_name},
              {"import_denylist", p.import_denylist},
              {"play_names", p.play_names},
              {"template_id", p.template_id}};
}

DecomposeProfile profile_from_json(const Json& j) {
  DecomposeProfile p;
  std::vector<std::string> bad;
  if (!j.is_object()) throw ConfigError({"decompose profile (must be an object)"});
  auto list = [&](const char* key, std::vector<std::string>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_string(); })) {
      bad.push_back(std::string(key) + " (must be a list of strings)");
      return;
    }
    out = v.get<std::vector<std::string>>();
  };
  auto text = [&](const char* key, std::string& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_string()) {
      bad.push_back(std::string(key) + " (must be a string)");
      return;
    }
    out = j.at(key).get<std::string>();
  };
  list("base_class_names", p.base_class_names);
  text("entry_method_name", p.entry_method_name);
  list("import_denylist", p.import_denylist);
  list("play_names", p.play_names);
  text("template_id", p.template_id);
  static const std::set<std::string> kKnown = {"base_class_names", "entry_method_name", "import_denylist",
                                               "play_names", "template_id"};
  for (const auto& [k, v] : j.items()) {
    if (kKnown.count(k) == 0) bad.push_back(k + " (unknown key)");
  }
  collect_problems(p, bad);
  if (!bad.empty()) throw ConfigError(bad);
  return p;
}

Json to_json(const SemanticUnit& u, const std::string& template_id) {
  return Json{{"schema_version", 1},
              {"origin_record_id", u.origin_record_id},
              {"class_name", u.class_name},
              {"source_span", {u.start_line, u.end_line}},
              {"features",
               {{"instantiated_objects", u.features.instantiated_objects},
                {"invoked_animations", u.features.invoked_animations},
                {"text_literals", u.features.text_literals},
                {"imports", u.features.imports}}},
              {"excerpt", u.excerpt},
              {"template_id", template_id}};
}

std::string source_lines(std::string_view source, int start_line, int end_line) {
  std::size_t pos = 0;
  int line = 1;
  auto line_end = [&](std::size_t from) {
    std::size_t i = from;
    while (i < source.size() && source[i] != '\n' && source[i] != '\r') ++i;
    if (i < source.size()) {
      if (source[i] == '\r' && i + 1 < source.size() && source[i + 1] == '\n') ++i;
      ++i;
    }
    return i;
  };
  while (line < start_line && pos < source.size()) {
    pos = line_end(pos);
    ++line;
  }
  const std::size_t begin = pos;
  while (line <= end_line && pos < source.size()) {
    pos = line_end(pos);
    ++line;
  }
  return std::string(source.substr(begin, pos - begin));
}

namespace {

class Collector {
 public:
  explicit Collector(const DecomposeProfile& p) : profile_(p) {}

  void visit(const Node& n, bool animation_position = false) {
    switch (n.kind) {
      case NodeKind::kCall: {
        const auto name = python::terminal_name(*n.kids[0]);
        if (!name.empty()) {
          if (animation_position) {
            add(features_.invoked_animations, name);
          } else if (std::isupper(static_cast<unsigned char>(name[0]))) {
            add(features_.instantiated_objects, name);
          }
        }
        visit(*n.kids[0]);
        const bool play = std::find(profile_.play_names.begin(), profile_.play_names.end(), name) !=
                          profile_.play_names.end();
        for (std::size_t i = 1; i < n.kids.size(); ++i) {
          if (play) {
            visit_animation_arg(*n.kids[i]);
          } else {
            visit(*n.kids[i]);
          }
        }
        return;
      }
      case NodeKind::kString:
        add(features_.text_literals, n.text);
        return;
      case NodeKind::kImport:
        for (const auto& alias : n.kids) add_import(alias->text);
        return;
      case NodeKind::kImportFrom:
        add_import(n.text);
        return;
      default:
        break;
    }
    for (const auto& d : n.decorators) visit(*d);
    for (const auto& b : n.bases) visit(*b);
    for (const auto& k : n.kids) visit(*k);
    for (const auto& s : n.body) visit(*s);
  }

  FeatureSet take() { return std::move(features_); }

 private:
  // Arguments of a play call: calls directly in argument position, or
  // reached through unpacking, list/tuple displays, comprehension elements
  // and conditional expressions, are animations.
  void visit_animation_arg(const Node& a) {
    switch (a.kind) {
      case NodeKind::kStarred:
        return visit_animation_arg(*a.kids[0]);
      case NodeKind::kCollection:
        if (a.text == "list" || a.text == "tuple") {
          for (const auto& k : a.kids) visit_animation_arg(*k);
          return;
        }
        break;
      case NodeKind::kComprehension:
        if (a.text == "list" || a.text == "gen") {
          visit_animation_arg(*a.kids[0]);
          for (std::size_t i = 1; i < a.kids.size(); ++i) visit(*a.kids[i]);
          return;
        }
        break;
      case NodeKind::kOp:
        if (a.text == "ifexp") {
          visit_animation_arg(*a.kids[0]);
          visit(*a.kids[1]);
          visit_animation_arg(*a.kids[2]);
          return;
        }
        break;
      case NodeKind::kCall:
        return visit(a, true);
      default:
        break;
    }
    visit(a);
  }

  void add(std::vector<std::string>& list, const std::string& v) {
    if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
  }

  bool denied(const std::string& module) const {
    const auto first = module.find_first_not_of('.');
    const std::string bare = first == std::string::npos ? std::string() : module.substr(first);
    for (const auto& pattern : profile_.import_denylist) {
      for (const auto* candidate : {&module, &bare}) {
        if (candidate->empty()) continue;
        std::size_t dot = 0;
        while (true) {
          dot = candidate->find('.', dot + 1);
          const auto prefix = candidate->substr(0, dot);
          if (::fnmatch(pattern.c_str(), prefix.c_str(), 0) == 0) return true;
          if (dot == std::string::npos) break;
        }
      }
    }
    return false;
  }

  void add_import(const std::string& module) {
    if (!denied(module)) add(features_.imports, module);
  }

  const DecomposeProfile& profile_;
  FeatureSet features_;
};

bool is_block_stmt(const Node& n) {
  return n.kind == NodeKind::kStmt && (n.text == "if" || n.text == "try" || n.text == "with");
}

// Module-level statements, looking through if/try/with blocks.
void module_level(const std::vector<python::NodePtr>& body, std::vector<const Node*>& out) {
  for (const auto& s : body) {
    if (is_block_stmt(*s)) {
      module_level(s->body, out);
    } else {
      out.push_back(s.get());
    }
  }
}

}  // namespace

FeatureSet extract_features(const std::vector<python::NodePtr>& unit_body, const DecomposeProfile& profile,
                            const std::vector<const python::Node*>& module_imports) {
  Collector c(profile);
  for (const auto* imp : module_imports) c.visit(*imp);
  for (const auto& s : unit_body) c.visit(*s);
  return c.take();
}

std::vector<SemanticUnit> parse_units(std::string_view source_text, const DecomposeProfile& profile,
                                      const std::string& origin_record_id, std::vector<std::string>* warnings) {
  profile.check();
  const auto module = python::parse_module(source_text);
  std::vector<const Node*> top;
  module_level(module->body, top);
  std::vector<const Node*> imports;
  for (const auto* s : top) {
    if (s->kind == NodeKind::kImport || s->kind == NodeKind::kImportFrom) imports.push_back(s);
  }

  std::vector<SemanticUnit> units;
  for (const auto* s : top) {
    if (s->kind != NodeKind::kClassDef) continue;
    const bool inherits = std::any_of(s->bases.begin(), s->bases.end(), [&](const python::NodePtr& b) {
      const auto name = python::terminal_name(*b);
      return std::find(profile.base_class_names.begin(), profile.base_class_names.end(), name) !=
             profile.base_class_names.end();
    });
    if (!inherits) continue;
    const Node* entry = nullptr;
    for (const auto& member : s->body) {
      if (member->kind == NodeKind::kFunctionDef && member->text == profile.entry_method_name) entry = member.get();
    }
    if (entry == nullptr) {
      if (warnings != nullptr) {
        warnings->push_back("class " + s->text + " at line " + std::to_string(s->line) + " has no " +
                            profile.entry_method_name + "() method; skipped");
      }
      continue;
    }
    SemanticUnit u;
    u.origin_record_id = origin_record_id;
    u.class_name = s->text;
    u.start_line = s->line;
    u.end_line = s->end_line;
    u.features = extract_features(entry->body, profile, imports);
    u.excerpt = source_lines(source_text, u.start_line, u.end_line);
    units.push_back(std::move(u));
  }
  std::stable_sort(units.begin(), units.end(),
                   [](const SemanticUnit& a, const SemanticUnit& b) { return a.start_line < b.start_line; });
  return units;
}

namespace {

class PythonAdapter final : public GrammarAdapter {
 public:
  std::vector<SemanticUnit> parse_units(std::string_view source_text, const DecomposeProfile& profile,
                                        const std::string& origin_record_id,
                                        std::vector<std::string>* warnings) const override {
    return vizforge::parse_units(source_text, profile, origin_record_id, warnings);
  }
};

}  // namespace

const GrammarAdapter* adapter_for(std::string_view language_tag) {
  static const PythonAdapter kPython;
  if (language_tag.substr(0, 6) == "python") return &kPython;
  return nullptr;
}

}  // namespace vizforge
