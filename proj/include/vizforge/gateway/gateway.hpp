// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vizforge/common/io.hpp"
#include "vizforge/gateway/template.hpp"
#include "vizforge/store/record.hpp"

namespace vizforge {

struct DecodeParams {
  double temperature = 0.0;
  int max_tokens = 2048;
  std::optional<std::uint64_t> seed;
};

/// One integer field of a judge reply, addressed by a key path.
struct ScoreField {
  std::vector<std::string> path;
  int min = 1;
  int max = 5;
};

/// One text field of a judge reply.
struct TextField {
  std::vector<std::string> path;
  bool required = true;
  bool single_line = false;
};

struct JudgeSchema {
  std::string name;
  std::vector<ScoreField> scores;
  std::vector<TextField> texts;
  /// Keys that may appear but are not validated.
  std::vector<std::vector<std::string>> optional_keys;
  /// Strict: the reply is exactly one single-line JSON object with no extra
  /// keys, scores are JSON integers. Lenient: markdown fences and prose
  /// around the object are stripped and integral numeric strings accepted.
  bool strict = false;
};

/// What a template's reply looks like. The stub provider uses it to produce
/// well-formed output; real providers ignore it.
struct OutputShape {
  enum class Kind { kText, kSections, kJson };
  Kind kind = Kind::kText;
  std::vector<std::string> sections;  // exact markers, e.g. "[Code Solution]"
  std::string code_section;           // marker whose body is fenced code
  std::optional<JudgeSchema> schema;
  std::string code_language = "python";
};

struct GatewayRequest {
  JudgeRole role = JudgeRole::kSynthesizer;
  std::string template_id;
  Variables variables;
  std::vector<std::string> attachments;  // artifact hashes
  DecodeParams decode;
  OutputShape expect;
  std::string task_id;
  /// Appended to the rendered prompt on a corrective re-ask.
  std::string corrective_note;
};

struct Attachment {
  std::string hash;
  MediaKind kind = MediaKind::kImage;
  std::string bytes;
};

/// A request after rendering, as handed to a provider.
struct ProviderCall {
  JudgeRole role = JudgeRole::kSynthesizer;
  std::string template_id;
  std::string prompt;
  std::string variables_hash;
  std::vector<Attachment> attachments;
  DecodeParams decode;
  const OutputShape* expect = nullptr;
};

class Provider {
 public:
  virtual ~Provider() = default;
  /// Returns the model's text. Throws TransportError for retryable failures
  /// and GatewayUnavailableError for permanent ones.
  virtual std::string send(const ProviderCall& call) = 0;
  virtual std::string name() const = 0;
};

struct StubOptions {
  /// Percent of generated code bodies that contain `fail_marker`, decided by
  /// the request hash, so a marker-aware sandbox fails them.
  int fail_percent = 0;
  std::string fail_marker = "# vizforge-stub: fail";
  /// Percent of replies that violate their shape (missing section, out of
  /// range score).
  int malformed_percent = 0;
};

/// Deterministic provider: the reply is a pure function of (template_id,
/// variables hash, corrective note) and the shape hint.
class StubProvider final : public Provider {
 public:
  explicit StubProvider(StubOptions options = {}) : options_(std::move(options)) {}
  std::string send(const ProviderCall& call) override;
  std::string name() const override { return "stub"; }

 private:
  StubOptions options_;
};

/// Test hook: replies with whatever the callback returns.
class ScriptedProvider final : public Provider {
 public:
  using Script = std::function<std::string(const ProviderCall&)>;
  explicit ScriptedProvider(Script script) : script_(std::move(script)) {}
  std::string send(const ProviderCall& call) override { return script_(call); }
  std::string name() const override { return "scripted"; }

 private:
  Script script_;
};

struct HttpProviderOptions {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string model;
  std::string api_key_env = "VIZFORGE_API_KEY";
  int timeout_seconds = 120;
  /// Frame extractor for video attachments: argv with {input}, {out_dir},
  /// {count}; empty disables video attachments.
  std::vector<std::string> frame_extractor;
};

/// OpenAI-compatible chat-completions provider.
std::unique_ptr<Provider> make_http_provider(HttpProviderOptions options);

/// Blocking token bucket. rate <= 0 disables limiting.
class RateLimiter {
 public:
  RateLimiter(double rate_per_second, double burst);
  void acquire();

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

struct RoleConfig {
  std::shared_ptr<Provider> provider;
  int max_retries = 2;
  std::chrono::milliseconds backoff{200};
  std::shared_ptr<RateLimiter> limiter;
};

struct JudgeResult {
  Json object;
  std::map<std::string, int> scores;  // key: path joined with '.'
  int attempts = 0;
};

/// Parses and validates one judge reply. Throws JudgeFormatError.
JudgeResult parse_judge_output(const std::string& text, const JudgeSchema& schema);

/// Indices of `count` uniformly spaced frames out of `frame_total`.
std::vector<int> sample_frame_indices(int frame_total, int count = 6);

/// Single choke point for model calls.
class Gateway {
 public:
  using ArtifactResolver = std::function<Attachment(const std::string& hash)>;

  Gateway(std::shared_ptr<TemplateStore> templates, ArtifactResolver resolver);

  void set_role(JudgeRole role, RoleConfig config);
  void set_call_log(std::filesystem::path path, std::string run_id);

  /// Renders, sends with retries and logs. Throws TemplateError,
  /// PreconditionError (vision request without attachments) or
  /// GatewayUnavailableError once retries are exhausted.
  std::string complete(const GatewayRequest& request);

  /// complete() + parse_judge_output() with one corrective re-ask.
  /// Throws JudgeFormatError when the re-ask is also invalid.
  JudgeResult judge_structured(GatewayRequest request, const JudgeSchema& schema);

  TemplateStore& templates() { return *templates_; }
  std::int64_t calls_logged() const;

 private:
  RoleConfig& role(JudgeRole r);
  void log_call(const GatewayRequest& request, const std::string& request_hash, const std::string& response_hash,
                int attempt, const std::string& outcome);

  std::shared_ptr<TemplateStore> templates_;
  ArtifactResolver resolver_;
  std::map<JudgeRole, RoleConfig> roles_;
  mutable std::mutex log_mu_;
  std::filesystem::path log_path_;
  std::string run_id_;
  std::int64_t logged_ = 0;
};

/// Content between `marker` and the next marker of `markers` (or the end),
/// trimmed; a fenced block inside is unwrapped. nullopt when absent or empty.
std::optional<std::string> extract_section(const std::string& text, const std::string& marker,
                                           const std::vector<std::string>& markers);

/// Body of the last fenced code block; nullopt when there is none.
std::optional<std::string> last_fenced_block(const std::string& text);

}  // namespace vizforge
