// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include "vizforge/common/errors.hpp"
#include "vizforge/pipeline/pipeline.hpp"

namespace vizforge {
namespace fs = std::filesystem;

namespace {

const std::map<std::string, JudgeRole> kRoleKeys = {
    {"synthesizer", JudgeRole::kSynthesizer},
    {"text_judge", JudgeRole::kTextJudge},
    {"vision_judge", JudgeRole::kVisionJudge},
};

class Parser {
 public:
  explicit Parser(fs::path base) : base_(std::move(base)) {}

  std::vector<std::string> bad;

  void unknown_keys(const Json& obj, const std::string& prefix, const std::set<std::string>& known) {
    for (const auto& [k, v] : obj.items()) {
      if (!known.count(k)) bad.push_back(prefix + k + " (unknown key)");
    }
  }

  bool object(const Json& v, const std::string& key) {
    if (v.is_object()) return true;
    bad.push_back(key + " (expected an object)");
    return false;
  }

  std::optional<std::string> string(const Json& v, const std::string& key) {
    if (v.is_string() && !v.get<std::string>().empty()) return v.get<std::string>();
    bad.push_back(key + " (expected a non-empty string)");
    return std::nullopt;
  }

  std::optional<fs::path> path(const Json& v, const std::string& key) {
    auto s = string(v, key);
    if (!s) return std::nullopt;
    fs::path p(*s);
    return p.is_absolute() ? p : base_ / p;
  }

  std::optional<int> integer(const Json& v, const std::string& key, int min, int max = 1 << 30) {
    if (v.is_number_integer() && v.get<std::int64_t>() >= min && v.get<std::int64_t>() <= max) return v.get<int>();
    bad.push_back(key + " (expected an integer in [" + std::to_string(min) + ", " + std::to_string(max) + "])");
    return std::nullopt;
  }

  std::optional<double> number(const Json& v, const std::string& key, double min) {
    if (v.is_number() && v.get<double>() >= min) return v.get<double>();
    bad.push_back(key + " (expected a number >= " + std::to_string(min) + ")");
    return std::nullopt;
  }

  std::optional<std::vector<std::string>> strings(const Json& v, const std::string& key) {
    if (v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& s) { return s.is_string(); })) {
      return v.get<std::vector<std::string>>();
    }
    bad.push_back(key + " (expected a list of strings)");
    return std::nullopt;
  }

  template <typename F>
  void nested(F&& f) {
    try {
      f();
    } catch (const ConfigError& e) {
      bad.insert(bad.end(), e.offending_keys().begin(), e.offending_keys().end());
    }
  }

 private:
  fs::path base_;
};

void parse_sources(Parser& p, const Json& v, PipelineConfig& c) {
  if (!v.is_array()) {
    p.bad.push_back("sources (expected a list)");
    return;
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto key = "sources[" + std::to_string(i) + "]";
    const auto& s = v[i];
    if (!p.object(s, key)) continue;
    p.unknown_keys(s, key + ".", {"source_type", "locator", "field_map", "language_tag"});
    SourceDescriptor d;
    bool ok = true;
    if (!s.contains("source_type") || !s["source_type"].is_string() ||
        !parse_source_type(s["source_type"].get<std::string>())) {
      p.bad.push_back(key + ".source_type (missing or unknown)");
      ok = false;
    } else {
      d.source_type = *parse_source_type(s["source_type"].get<std::string>());
      if (!c.matrix.row(d.source_type)) {
        p.bad.push_back(key + ".source_type (" + s["source_type"].get<std::string>() + " has no matrix row)");
        ok = false;
      }
    }
    if (!s.contains("locator")) {
      p.bad.push_back(key + ".locator (missing)");
      ok = false;
    } else if (auto loc = p.path(s["locator"], key + ".locator")) {
      d.locator = loc->string();
    } else {
      ok = false;
    }
    if (s.contains("field_map") && p.object(s["field_map"], key + ".field_map")) {
      const auto& fm = s["field_map"];
      p.unknown_keys(fm, key + ".field_map.", {"instruction", "code", "visual"});
      if (fm.contains("instruction")) {
        if (auto x = p.string(fm["instruction"], key + ".field_map.instruction")) d.field_map.instruction = *x;
      }
      if (fm.contains("code")) {
        if (auto x = p.string(fm["code"], key + ".field_map.code")) d.field_map.code = *x;
      }
      if (fm.contains("visual")) {
        if (auto x = p.string(fm["visual"], key + ".field_map.visual")) d.field_map.visual = *x;
      }
    } else if (!s.contains("field_map")) {
      d.field_map.instruction = "instruction";
    }
    if (s.contains("language_tag")) {
      if (auto x = p.string(s["language_tag"], key + ".language_tag")) d.language_tag = *x;
    } else if (ok) {
      d.language_tag = c.matrix.row(d.source_type)->language_tag;
    }
    if (ok) c.sources.push_back(std::move(d));
  }
}

void parse_gateway(Parser& p, const Json& v, PipelineConfig& c) {
  if (!p.object(v, "gateway")) return;
  p.unknown_keys(v, "gateway.", {"roles", "stub"});
  if (v.contains("roles") && p.object(v["roles"], "gateway.roles")) {
    for (const auto& [name, r] : v["roles"].items()) {
      const auto key = "gateway.roles." + name;
      const auto role = kRoleKeys.find(name);
      if (role == kRoleKeys.end()) {
        p.bad.push_back(key + " (unknown role)");
        continue;
      }
      if (!p.object(r, key)) continue;
      p.unknown_keys(r, key + ".", {"provider", "base_url", "model", "api_key_env", "timeout_seconds", "max_retries",
                                    "backoff_ms", "rate_per_second", "burst", "frame_extractor"});
      RoleSettings s;
      if (r.contains("provider")) {
        if (auto x = p.string(r["provider"], key + ".provider")) {
          if (*x != "stub" && *x != "http") p.bad.push_back(key + ".provider (expected stub or http)");
          s.provider = *x;
        }
      }
      if (r.contains("base_url")) {
        if (auto x = p.string(r["base_url"], key + ".base_url")) s.http.base_url = *x;
      }
      if (r.contains("model")) {
        if (auto x = p.string(r["model"], key + ".model")) s.http.model = *x;
      }
      if (r.contains("api_key_env")) {
        if (auto x = p.string(r["api_key_env"], key + ".api_key_env")) s.http.api_key_env = *x;
      }
      if (r.contains("timeout_seconds")) {
        if (auto x = p.integer(r["timeout_seconds"], key + ".timeout_seconds", 1)) s.http.timeout_seconds = *x;
      }
      if (r.contains("max_retries")) {
        if (auto x = p.integer(r["max_retries"], key + ".max_retries", 0, 20)) s.max_retries = *x;
      }
      if (r.contains("backoff_ms")) {
        if (auto x = p.integer(r["backoff_ms"], key + ".backoff_ms", 0)) s.backoff_ms = *x;
      }
      if (r.contains("rate_per_second")) {
        if (auto x = p.number(r["rate_per_second"], key + ".rate_per_second", 0)) s.rate_per_second = *x;
      }
      if (r.contains("burst")) {
        if (auto x = p.number(r["burst"], key + ".burst", 1)) s.burst = *x;
      }
      if (r.contains("frame_extractor")) {
        if (auto x = p.strings(r["frame_extractor"], key + ".frame_extractor")) s.http.frame_extractor = *x;
      }
      if (s.provider == "http" && (s.http.base_url.empty() || s.http.model.empty())) {
        p.bad.push_back(key + " (http provider needs base_url and model)");
      }
      c.roles[role->second] = std::move(s);
    }
  }
  if (v.contains("stub") && p.object(v["stub"], "gateway.stub")) {
    const auto& s = v["stub"];
    p.unknown_keys(s, "gateway.stub.", {"fail_percent", "malformed_percent", "fail_marker"});
    if (s.contains("fail_percent")) {
      if (auto x = p.integer(s["fail_percent"], "gateway.stub.fail_percent", 0, 100)) c.stub.fail_percent = *x;
    }
    if (s.contains("malformed_percent")) {
      if (auto x = p.integer(s["malformed_percent"], "gateway.stub.malformed_percent", 0, 100)) {
        c.stub.malformed_percent = *x;
      }
    }
    if (s.contains("fail_marker")) {
      if (auto x = p.string(s["fail_marker"], "gateway.stub.fail_marker")) c.stub.fail_marker = *x;
    }
  }
}

void parse_review(Parser& p, const Json& v, PipelineConfig& c) {
  if (!p.object(v, "review")) return;
  p.unknown_keys(v, "review.", {"dir", "annotators", "quorum", "host", "port", "static_dir"});
  if (v.contains("dir")) {
    if (auto x = p.path(v["dir"], "review.dir")) c.review_dir = *x;
  }
  if (v.contains("annotators")) {
    if (auto x = p.strings(v["annotators"], "review.annotators")) c.review.annotators = {x->begin(), x->end()};
  }
  if (v.contains("quorum")) {
    if (auto x = p.integer(v["quorum"], "review.quorum", 1, 100)) c.review.quorum = *x;
  }
  if (v.contains("host")) {
    if (auto x = p.string(v["host"], "review.host")) c.review_host = *x;
  }
  if (v.contains("port")) {
    if (auto x = p.integer(v["port"], "review.port", 0, 65535)) c.review_port = *x;
  }
  if (v.contains("static_dir")) {
    if (auto x = p.path(v["static_dir"], "review.static_dir")) c.review_static_dir = *x;
  }
}

}  // namespace

std::vector<std::string> required_templates() {
  return {"synth-evolve",   "synth-recontext",          "synth-reverse-instruction", "synth-reverse-code",
          "synth-translate-instruction", "synth-translate-code", "reward-vision", "reward-text",
          "reward-edit",    "bench-generate",           "bench-judge"};
}

PipelineConfig config_from_json(const Json& document, const fs::path& base_dir) {
  if (!document.is_object()) throw ConfigError({"config (expected an object)"});
  Parser p(base_dir);
  PipelineConfig c;
  c.document = document;
  p.unknown_keys(document, "", {"store", "templates", "exports", "max_parallel", "checkpoint_every", "sources", "matrix",
                                "profiles", "decompose", "sandbox", "gateway", "review", "bench"});

  if (!document.contains("store")) {
    p.bad.push_back("store (missing)");
  } else if (auto x = p.path(document["store"], "store")) {
    c.store_root = *x;
  }
  c.template_dir = VIZFORGE_DEFAULT_TEMPLATE_DIR;
  if (document.contains("templates")) {
    if (auto x = p.path(document["templates"], "templates")) c.template_dir = *x;
  }
  c.export_dir = c.store_root / "exports";
  if (document.contains("exports")) {
    if (auto x = p.path(document["exports"], "exports")) c.export_dir = *x;
  }
  if (document.contains("max_parallel")) {
    if (auto x = p.integer(document["max_parallel"], "max_parallel", 1, 256)) c.max_parallel = *x;
  }
  if (document.contains("checkpoint_every")) {
    if (auto x = p.integer(document["checkpoint_every"], "checkpoint_every", 1)) c.checkpoint_every = *x;
  }

  c.matrix = default_matrix();
  if (document.contains("matrix")) p.nested([&] { c.matrix = matrix_from_json(document["matrix"]); });
  c.profiles = default_profiles();
  if (document.contains("profiles")) p.nested([&] { c.profiles = profiles_from_json(document["profiles"]); });
  for (const auto& [type, row] : c.matrix.rows) {
    if (!c.profiles.count(row.validation_profile)) {
      p.bad.push_back("matrix.rows." + std::string(to_string(type)) + ".validation (unknown profile " +
                      row.validation_profile + ")");
    }
  }
  if (document.contains("sources")) parse_sources(p, document["sources"], c);

  if (document.contains("decompose") && p.object(document["decompose"], "decompose")) {
    Json prof = document["decompose"];
    if (prof.contains("sources")) {
      if (auto x = p.strings(prof["sources"], "decompose.sources")) {
        c.decompose_sources.clear();
        for (const auto& s : *x) {
          if (auto t = parse_source_type(s)) c.decompose_sources.insert(*t);
          else p.bad.push_back("decompose.sources (unknown source type " + s + ")");
        }
      }
      prof.erase("sources");
    }
    p.nested([&] {
      try {
        c.decompose = profile_from_json(prof);
        c.decompose.check();
      } catch (const ConfigError& e) {
        std::vector<std::string> keys;
        for (const auto& k : e.offending_keys()) keys.push_back(k.rfind("decompose", 0) == 0 ? k : "decompose." + k);
        throw ConfigError(keys);
      }
    });
  }

  if (document.contains("sandbox") && p.object(document["sandbox"], "sandbox")) {
    const auto& s = document["sandbox"];
    p.unknown_keys(s, "sandbox.", {"executor", "workspace_root", "tail_bytes"});
    if (s.contains("executor")) {
      if (auto x = p.string(s["executor"], "sandbox.executor")) {
        if (*x != "process" && *x != "noop") p.bad.push_back("sandbox.executor (expected process or noop)");
        c.executor = *x;
      }
    }
    if (s.contains("workspace_root")) {
      if (auto x = p.path(s["workspace_root"], "sandbox.workspace_root")) c.workspace_root = *x;
    }
    if (s.contains("tail_bytes")) {
      if (auto x = p.integer(s["tail_bytes"], "sandbox.tail_bytes", 256)) c.tail_bytes = static_cast<std::size_t>(*x);
    }
  }
  if (c.workspace_root.empty()) c.workspace_root = fs::temp_directory_path();

  if (document.contains("gateway")) parse_gateway(p, document["gateway"], c);
  c.review_dir = c.store_root / "review";
  if (document.contains("review")) parse_review(p, document["review"], c);

  c.bench_dir = c.store_root / "bench";
  if (document.contains("bench") && p.object(document["bench"], "bench")) {
    const auto& b = document["bench"];
    p.unknown_keys(b, "bench.", {"tasks", "out"});
    if (b.contains("tasks")) {
      if (auto x = p.path(b["tasks"], "bench.tasks")) c.bench_tasks = *x;
    }
    if (b.contains("out")) {
      if (auto x = p.path(b["out"], "bench.out")) c.bench_dir = *x;
    }
  }

  std::error_code ec;
  for (const auto& id : required_templates()) {
    const auto file = c.template_dir / (id + ".txt");
    if (!fs::is_regular_file(file, ec)) p.bad.push_back("templates (missing template file " + file.string() + ")");
  }
  if (!p.bad.empty()) throw ConfigError(std::move(p.bad));
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const NotFoundError&) {
    throw ConfigError({"config file " + path.string() + " (cannot be read)"});
  }
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError({"config file " + path.string() + " (" + e.what() + ")"});
  }
  return config_from_json(doc, fs::absolute(path).parent_path());
}

}  // namespace vizforge
