// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/gateway/gateway.hpp"

#include <cmath>
#include <fstream>
#include <thread>

#include "vizforge/common/errors.hpp"
#include "vizforge/common/hash.hpp"
#include "vizforge/common/rational.hpp"

namespace vizforge {

namespace {

std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
  return out;
}

const Json* lookup(const Json& obj, const std::vector<std::string>& path) {
  const Json* cur = &obj;
  for (const auto& key : path) {
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &cur->at(key);
  }
  return cur;
}

// Declared key tree of a schema, for the strict no-extra-keys check.
struct KeyTree {
  std::map<std::string, KeyTree> kids;
  void add(const std::vector<std::string>& path, std::size_t i = 0) {
    if (i < path.size()) kids[path[i]].add(path, i + 1);
  }
};

void check_keys(const Json& obj, const KeyTree& tree, const std::string& where) {
  if (tree.kids.empty() || !obj.is_object()) return;
  for (const auto& [k, v] : obj.items()) {
    const auto it = tree.kids.find(k);
    if (it == tree.kids.end()) throw JudgeFormatError("unexpected key '" + where + k + "'");
    check_keys(v, it->second, where + k + ".");
  }
}

std::optional<int> integral(const Json& v, bool strict) {
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<int>();
  if (strict) return std::nullopt;
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && std::floor(d) == d && std::fabs(d) < 1e6) return static_cast<int>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const auto s = trim(v.get<std::string>());
    if (s.empty()) return std::nullopt;
    try {
      const auto r = Rational::parse(s);
      if (r.den() == 1 && r.num() > -1000000 && r.num() < 1000000) return static_cast<int>(r.num());
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

}  // namespace

JudgeResult parse_judge_output(const std::string& text, const JudgeSchema& schema) {
  Json obj;
  if (schema.strict) {
    if (text.empty() || text.front() != '{' || text.back() != '}') {
      throw JudgeFormatError("reply must be a bare JSON object (first character '{', last '}')");
    }
    if (text.find('\n') != std::string::npos || text.find('\r') != std::string::npos) {
      throw JudgeFormatError("reply must be a single line");
    }
    try {
      obj = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw JudgeFormatError(std::string("reply is not valid JSON: ") + e.what());
    }
  } else {
    const auto open = text.find('{');
    const auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
      throw JudgeFormatError("reply contains no JSON object");
    }
    try {
      obj = Json::parse(text.substr(open, close - open + 1));
    } catch (const Json::parse_error& e) {
      throw JudgeFormatError(std::string("reply is not valid JSON: ") + e.what());
    }
  }
  if (!obj.is_object()) throw JudgeFormatError("reply is not a JSON object");

  if (schema.strict) {
    KeyTree tree;
    for (const auto& f : schema.scores) tree.add(f.path);
    for (const auto& f : schema.texts) tree.add(f.path);
    for (const auto& p : schema.optional_keys) tree.add(p);
    check_keys(obj, tree, "");
  }

  JudgeResult result;
  for (const auto& f : schema.scores) {
    const auto key = join_path(f.path);
    const Json* v = lookup(obj, f.path);
    if (v == nullptr) throw JudgeFormatError("missing score '" + key + "'");
    const auto value = integral(*v, schema.strict);
    if (!value) throw JudgeFormatError("score '" + key + "' is not an integer: " + v->dump());
    if (*value < f.min || *value > f.max) {
      throw JudgeFormatError("score '" + key + "' = " + std::to_string(*value) + " outside [" +
                             std::to_string(f.min) + ", " + std::to_string(f.max) + "]");
    }
    result.scores[key] = *value;
  }
  for (const auto& f : schema.texts) {
    const auto key = join_path(f.path);
    const Json* v = lookup(obj, f.path);
    if (v == nullptr) {
      if (f.required) throw JudgeFormatError("missing field '" + key + "'");
      continue;
    }
    if (!v->is_string()) throw JudgeFormatError("field '" + key + "' is not text");
    if (schema.strict && f.single_line && v->get<std::string>().find('\n') != std::string::npos) {
      throw JudgeFormatError("field '" + key + "' must be a single line");
    }
  }
  result.object = std::move(obj);
  result.attempts = 1;
  return result;
}

std::vector<int> sample_frame_indices(int frame_total, int count) {
  std::vector<int> out;
  if (frame_total <= 0 || count <= 0) return out;
  if (frame_total <= count) {
    for (int i = 0; i < frame_total; ++i) out.push_back(i);
    return out;
  }
  // Midpoints of `count` equal segments.
  for (int i = 0; i < count; ++i) {
    out.push_back(static_cast<int>((static_cast<std::int64_t>(2 * i + 1) * frame_total) / (2 * count)));
  }
  return out;
}

std::optional<std::string> last_fenced_block(const std::string& text) {
  const auto lines = split_lines(text);
  std::optional<std::string> last;
  bool open = false;
  std::string body;
  for (const auto& raw : lines) {
    const auto line = trim(raw);
    if (!open && line.rfind("```", 0) == 0) {
      open = true;
      body.clear();
    } else if (open && line == "```") {
      open = false;
      last = body;
    } else if (open) {
      body += raw + "\n";
    }
  }
  return last;
}

std::optional<std::string> extract_section(const std::string& text, const std::string& marker,
                                           const std::vector<std::string>& markers) {
  const auto at = text.find(marker);
  if (at == std::string::npos) return std::nullopt;
  const auto begin = at + marker.size();
  auto end = text.size();
  for (const auto& other : markers) {
    if (other == marker) continue;
    const auto pos = text.find(other, begin);
    if (pos != std::string::npos && pos < end) end = pos;
  }
  auto body = trim(std::string_view(text).substr(begin, end - begin));
  if (body.rfind("```", 0) == 0) {
    if (auto fenced = last_fenced_block(body)) body = trim(*fenced);
  }
  if (body.empty()) return std::nullopt;
  return body;
}

// ---- stub ----

std::string StubProvider::send(const ProviderCall& call) {
  const auto h = sha256_hex(call.template_id + "\n" + call.variables_hash);
  auto byte = [&](std::size_t i) { return std::stoi(h.substr((2 * i) % 64, 2), nullptr, 16); };
  const bool malformed = byte(0) % 100 < options_.malformed_percent;
  const bool fail = byte(1) % 100 < options_.fail_percent;
  const auto tag = h.substr(0, 12);
  const OutputShape shape = call.expect != nullptr ? *call.expect : OutputShape{};

  auto code_body = [&] {
    std::string code;
    if (shape.code_language == "wolfram") {
      code = "(* stub " + call.template_id + " " + tag + " *)\nPrint[\"stub " + tag + "\"]\n";
    } else {
      code = "# stub " + call.template_id + " " + tag + "\nprint(\"stub " + tag + "\")\n";
    }
    if (fail) code += options_.fail_marker + "\n";
    return code;
  };

  switch (shape.kind) {
    case OutputShape::Kind::kText:
      if (malformed) return "I cannot produce a program for this request.";
      return "Stub reply " + tag + ".\n\n```" + shape.code_language + "\n" + code_body() + "```\n";
    case OutputShape::Kind::kSections: {
      std::string out;
      for (std::size_t i = 0; i < shape.sections.size(); ++i) {
        const auto& m = shape.sections[i];
        if (m == shape.code_section) {
          if (malformed) continue;
          out += m + "\n```" + shape.code_language + "\n" + code_body() + "```\n\n";
        } else {
          out += m + "\nStub " + call.template_id + " text " + tag + " (part " + std::to_string(i + 1) + ").\n\n";
        }
      }
      if (malformed && shape.code_section.empty() && !shape.sections.empty()) return "no sections";
      return out;
    }
    case OutputShape::Kind::kJson: {
      Json obj = Json::object();
      if (!shape.schema) return "{}";
      std::size_t i = 2;
      for (const auto& f : shape.schema->scores) {
        const int span = f.max - f.min + 1;
        int v = f.min + byte(i++) % span;
        // Bias 1..5 rubrics toward the upper half so retention is exercised.
        if (f.min == 1 && f.max == 5) v = 2 + byte(i++) % 4;
        Json* cur = &obj;
        for (std::size_t k = 0; k + 1 < f.path.size(); ++k) cur = &(*cur)[f.path[k]];
        (*cur)[f.path.back()] = v;
      }
      if (malformed && !shape.schema->scores.empty()) {
        const auto& f = shape.schema->scores.front();
        Json* cur = &obj;
        for (std::size_t k = 0; k + 1 < f.path.size(); ++k) cur = &(*cur)[f.path[k]];
        (*cur)[f.path.back()] = f.max + 1;
      }
      for (const auto& f : shape.schema->texts) {
        Json* cur = &obj;
        for (std::size_t k = 0; k + 1 < f.path.size(); ++k) cur = &(*cur)[f.path[k]];
        (*cur)[f.path.back()] = "stub reasoning " + tag;
      }
      return obj.dump();
    }
  }
  return {};
}

// ---- rate limiter ----

RateLimiter::RateLimiter(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0) return;
  while (true) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

// ---- gateway ----

Gateway::Gateway(std::shared_ptr<TemplateStore> templates, ArtifactResolver resolver)
    : templates_(std::move(templates)), resolver_(std::move(resolver)) {}

void Gateway::set_role(JudgeRole r, RoleConfig config) { roles_[r] = std::move(config); }

void Gateway::set_call_log(std::filesystem::path path, std::string run_id) {
  std::lock_guard lock(log_mu_);
  log_path_ = std::move(path);
  run_id_ = std::move(run_id);
  if (!log_path_.empty()) std::filesystem::create_directories(log_path_.parent_path());
}

std::int64_t Gateway::calls_logged() const {
  std::lock_guard lock(log_mu_);
  return logged_;
}

RoleConfig& Gateway::role(JudgeRole r) {
  const auto it = roles_.find(r);
  if (it == roles_.end() || !it->second.provider) {
    throw GatewayUnavailableError("no provider configured for role " + std::string(to_string(r)));
  }
  return it->second;
}

void Gateway::log_call(const GatewayRequest& request, const std::string& request_hash,
                       const std::string& response_hash, int attempt, const std::string& outcome) {
  Json line = {{"run_id", run_id_},
               {"task_id", request.task_id},
               {"role", to_string(request.role)},
               {"template_id", request.template_id},
               {"request_hash", request_hash},
               {"response_hash", response_hash.empty() ? Json(nullptr) : Json(response_hash)},
               {"attempt", attempt},
               {"outcome", outcome}};
  std::lock_guard lock(log_mu_);
  ++logged_;
  if (log_path_.empty()) return;
  std::ofstream out(log_path_, std::ios::app | std::ios::binary);
  out << canonical_dump(line) << '\n';
  if (!out) throw StorageError("cannot append to call log " + log_path_.string());
}

std::string Gateway::complete(const GatewayRequest& request) {
  auto& cfg = role(request.role);
  if (request.role == JudgeRole::kVisionJudge && request.attachments.empty()) {
    throw PreconditionError("vision_judge request without attachments");
  }
  const auto& tmpl = templates_->get(request.template_id);
  ProviderCall call;
  call.role = request.role;
  call.template_id = request.template_id;
  call.prompt = tmpl.render(request.variables);
  Json vars(request.variables);
  if (!request.corrective_note.empty()) {
    call.prompt += "\n\n" + request.corrective_note;
    vars["__corrective_note"] = request.corrective_note;
  }
  call.variables_hash = sha256_hex(canonical_dump(vars));
  call.decode = request.decode;
  call.expect = &request.expect;
  for (const auto& hash : request.attachments) call.attachments.push_back(resolver_(hash));

  Json req = {{"role", to_string(request.role)},
              {"template_id", request.template_id},
              {"prompt", call.prompt},
              {"attachments", request.attachments},
              {"temperature", request.decode.temperature},
              {"max_tokens", request.decode.max_tokens}};
  if (request.decode.seed) req["seed"] = *request.decode.seed;
  const auto request_hash = sha256_hex(canonical_dump(req));

  std::string last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (cfg.limiter) cfg.limiter->acquire();
    try {
      auto text = cfg.provider->send(call);
      log_call(request, request_hash, sha256_hex(text), attempt, "ok");
      return text;
    } catch (const TransportError& e) {
      last_error = e.what();
      log_call(request, request_hash, "", attempt, std::string("transport_error: ") + e.what());
    } catch (const GatewayUnavailableError& e) {
      log_call(request, request_hash, "", attempt, std::string("unavailable: ") + e.what());
      throw;
    }
    if (attempt < cfg.max_retries && cfg.backoff.count() > 0) {
      std::this_thread::sleep_for(cfg.backoff * (1LL << std::min(attempt, 10)));
    }
  }
  throw GatewayUnavailableError(cfg.provider->name() + " unavailable after " + std::to_string(cfg.max_retries + 1) +
                                " attempts: " + last_error);
}

JudgeResult Gateway::judge_structured(GatewayRequest request, const JudgeSchema& schema) {
  request.expect.kind = OutputShape::Kind::kJson;
  request.expect.schema = schema;
  const auto first = complete(request);
  try {
    return parse_judge_output(first, schema);
  } catch (const JudgeFormatError& e) {
    request.corrective_note = std::string("Your previous reply was rejected: ") + e.what() +
                              ". Reply again with only the JSON object described above.";
  }
  const auto second = complete(request);
  try {
    auto result = parse_judge_output(second, schema);
    result.attempts = 2;
    return result;
  } catch (const JudgeFormatError& e) {
    throw JudgeFormatError(std::string("judge reply invalid after re-ask: ") + e.what());
  }
}

}  // namespace vizforge
