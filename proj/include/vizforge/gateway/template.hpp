// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>

namespace vizforge {

using Variables = std::map<std::string, std::string>;

/// Plain-text prompt template with `{identifier}` placeholders. `{{` and
/// `}}` are literal braces, so JSON examples survive rendering.
class PromptTemplate {
 public:
  /// Throws TemplateError on an unbalanced brace or a malformed placeholder.
  PromptTemplate(std::string id, std::string text);

  const std::string& id() const { return id_; }
  const std::set<std::string>& placeholders() const { return placeholders_; }

  /// Throws TemplateError naming every placeholder absent from `vars`.
  std::string render(const Variables& vars) const;

 private:
  std::string id_;
  std::string text_;
  std::set<std::string> placeholders_;
};

/// Loads `<dir>/<template_id>.txt` on first use and caches it.
class TemplateStore {
 public:
  explicit TemplateStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path_for(std::string_view template_id) const;
  bool exists(std::string_view template_id) const;

  /// Throws TemplateError when the file is missing or malformed.
  const PromptTemplate& get(const std::string& template_id);

 private:
  std::filesystem::path dir_;
  std::mutex mu_;
  std::map<std::string, PromptTemplate> cache_;
};

}  // namespace vizforge
