// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/gateway/template.hpp"

#include <algorithm>
#include <cctype>

#include "vizforge/common/errors.hpp"
#include "vizforge/common/io.hpp"

namespace vizforge {
namespace {

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Walks the template, calling on_text for literal runs and on_name for each
// placeholder.
template <typename Text, typename Name>
void scan(const std::string& id, std::string_view t, Text&& on_text, Name&& on_name) {
  std::size_t i = 0;
  while (i < t.size()) {
    const char c = t[i];
    if (c == '{' && i + 1 < t.size() && t[i + 1] == '{') {
      on_text("{");
      i += 2;
    } else if (c == '}' && i + 1 < t.size() && t[i + 1] == '}') {
      on_text("}");
      i += 2;
    } else if (c == '{') {
      const auto close = t.find('}', i + 1);
      if (close == std::string_view::npos) {
        throw TemplateError("template " + id + ": unclosed '{' at offset " + std::to_string(i));
      }
      const auto name = t.substr(i + 1, close - i - 1);
      const bool valid = !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0])) &&
                         std::all_of(name.begin(), name.end(), ident_char);
      if (!valid) {
        throw TemplateError("template " + id + ": malformed placeholder '{" + std::string(name) + "}'");
      }
      on_name(std::string(name));
      i = close + 1;
    } else if (c == '}') {
      throw TemplateError("template " + id + ": stray '}' at offset " + std::to_string(i));
    } else {
      const auto next = t.find_first_of("{}", i);
      const auto end = next == std::string_view::npos ? t.size() : next;
      on_text(t.substr(i, end - i));
      i = end;
    }
  }
}

}  // namespace

PromptTemplate::PromptTemplate(std::string id, std::string text) : id_(std::move(id)), text_(std::move(text)) {
  scan(id_, text_, [](std::string_view) {}, [&](const std::string& name) { placeholders_.insert(name); });
}

std::string PromptTemplate::render(const Variables& vars) const {
  std::vector<std::string> missing;
  for (const auto& p : placeholders_) {
    if (vars.count(p) == 0) missing.push_back(p);
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "{" : ", {") + m + "}";
    throw TemplateError("template " + id_ + ": missing placeholder value(s) " + names);
  }
  std::string out;
  out.reserve(text_.size());
  scan(id_, text_, [&](std::string_view s) { out.append(s); }, [&](const std::string& name) { out += vars.at(name); });
  return out;
}

TemplateStore::TemplateStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path TemplateStore::path_for(std::string_view template_id) const {
  return dir_ / (std::string(template_id) + ".txt");
}

bool TemplateStore::exists(std::string_view template_id) const {
  std::error_code ec;
  return std::filesystem::is_regular_file(path_for(template_id), ec);
}

const PromptTemplate& TemplateStore::get(const std::string& template_id) {
  std::lock_guard lock(mu_);
  if (auto it = cache_.find(template_id); it != cache_.end()) return it->second;
  std::string text;
  try {
    text = read_file(path_for(template_id));
  } catch (const NotFoundError&) {
    throw TemplateError("template file not found: " + path_for(template_id).string());
  }
  return cache_.emplace(template_id, PromptTemplate(template_id, std::move(text))).first->second;
}

}  // namespace vizforge
