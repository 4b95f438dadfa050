// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/synthesis/synthesis.hpp"

#include <algorithm>

#include "vizforge/common/errors.hpp"
#include "vizforge/common/hash.hpp"

namespace vizforge {
namespace {

std::string task_hash(const Json& identity) { return sha256_hex(canonical_dump(identity)).substr(0, 24); }

SynthesisTask make_task(Strategy s, const SampleRecord& r) {
  SynthesisTask t;
  t.strategy = s;
  t.seed_record_ids = {r.record_id};
  return t;
}

void assign_id(SynthesisTask& t, std::uint64_t plan_seed) {
  Json id = {{"plan_seed", plan_seed}, {"strategy", to_string(t.strategy)}, {"seeds", t.seed_record_ids}};
  if (t.concept_keyword) id["concept"] = *t.concept_keyword;
  if (t.target_domain) id["target"] = to_string(*t.target_domain);
  if (t.strategy == Strategy::kReverseInstruction) {
    id["k"] = t.snippet_lines;
    id["rng_seed"] = t.rng_seed;
  }
  t.task_id = task_hash(id);
}

std::string source_name(SourceType t) { return std::string(to_string(t)); }

}  // namespace

Json to_json(const SynthesisTask& t) {
  Json j = {{"task_id", t.task_id},
            {"strategy", to_string(t.strategy)},
            {"seed_record_ids", t.seed_record_ids},
            {"attempt", t.attempt}};
  if (t.concept_keyword) j["concept"] = *t.concept_keyword;
  if (t.target_domain) j["target_domain"] = to_string(*t.target_domain);
  if (t.strategy == Strategy::kReverseInstruction) {
    j["snippet_lines"] = t.snippet_lines;
    j["rng_seed"] = t.rng_seed;
  }
  if (t.feedback) j["feedback"] = *t.feedback;
  return j;
}

SynthesisTask task_from_json(const Json& j) {
  SynthesisTask t;
  t.task_id = j.at("task_id").get<std::string>();
  const auto s = parse_strategy(j.at("strategy").get<std::string>());
  if (!s) throw Error("task " + t.task_id + ": unknown strategy");
  t.strategy = *s;
  t.seed_record_ids = j.at("seed_record_ids").get<std::vector<std::string>>();
  t.attempt = j.value("attempt", 0);
  if (j.contains("concept")) t.concept_keyword = j["concept"].get<std::string>();
  if (j.contains("target_domain")) {
    const auto target = parse_source_type(j["target_domain"].get<std::string>());
    if (!target) throw Error("task " + t.task_id + ": unknown target_domain");
    t.target_domain = *target;
  }
  t.snippet_lines = j.value("snippet_lines", 0);
  t.rng_seed = j.value("rng_seed", std::uint64_t{0});
  if (j.contains("feedback")) t.feedback = j["feedback"].get<std::string>();
  return t;
}

std::vector<std::string> check_task(const SynthesisTask& t, SourceType seed_type, int max_retries) {
  std::vector<std::string> d;
  if (t.seed_record_ids.empty()) d.emplace_back("seed_record_ids: empty");
  if (t.strategy == Strategy::kNone) d.emplace_back("strategy: none");
  if (t.strategy == Strategy::kGuidedEvolution && (!t.concept_keyword || trim(*t.concept_keyword).empty())) {
    d.emplace_back("concept: required for guided_evolution");
  }
  if (t.strategy == Strategy::kBidirectionalTranslation && (!t.target_domain || *t.target_domain == seed_type)) {
    d.emplace_back("target_domain: required and must differ from the seed's source type");
  }
  if (t.strategy == Strategy::kReverseInstruction && t.snippet_lines < 1) d.emplace_back("snippet_lines: below 1");
  if (t.attempt < 0 || t.attempt > max_retries) d.emplace_back("attempt: outside [0, max_retries]");
  return d;
}

std::vector<SynthesisTask> plan_tasks(const MatrixConfig& m, const std::vector<SampleRecord>& records) {
  for (const auto& r : records) {
    if (m.row(r.source_type) == nullptr) {
      throw PlanningError("record " + r.record_id + ": source type '" + source_name(r.source_type) +
                          "' is not in the matrix");
    }
  }
  std::map<std::pair<SourceType, Strategy>, std::vector<SynthesisTask>> cells;
  for (const auto& r : records) {
    if (r.status != Status::kRaw) continue;
    const auto& row = *m.row(r.source_type);
    const bool paired = r.format == Format::kPaired;
    const auto material = std::to_string(m.seed) + "|" + r.record_id + "|";
    for (const auto s : row.strategies) {
      auto& cell = cells[{r.source_type, s}];
      switch (s) {
        case Strategy::kGuidedEvolution: {
          if (!paired) break;
          if (row.concepts.empty()) {
            throw PlanningError("record " + r.record_id + ": no concept pool for '" + source_name(r.source_type) + "'");
          }
          auto t = make_task(s, r);
          SeededRng rng(material + "concept");
          t.concept_keyword = row.concepts[rng.below(row.concepts.size())];
          cell.push_back(std::move(t));
          break;
        }
        case Strategy::kRecontextualization:
          if (paired) cell.push_back(make_task(s, r));
          break;
        case Strategy::kReverseInstruction: {
          const int nb = static_cast<int>(nonblank_lines(r.code).size());
          if (nb == 0) break;
          const int hi = std::min(m.reverse_k_max, nb);
          const int lo = std::min(m.reverse_k_min, hi);
          SeededRng rng(material + "reverse");
          auto t = make_task(s, r);
          t.snippet_lines = static_cast<int>(rng.between(lo, hi));
          t.rng_seed = sha256_u64(material + "snippet");
          cell.push_back(std::move(t));
          break;
        }
        case Strategy::kBidirectionalTranslation:
          if (!paired) break;
          for (const auto target : m.translation_targets(r.source_type)) {
            if (m.row(target) == nullptr) continue;
            auto t = make_task(s, r);
            t.target_domain = target;
            cell.push_back(std::move(t));
          }
          break;
        case Strategy::kNone:
          break;
      }
    }
  }
  std::vector<SynthesisTask> out;
  for (auto& [cell, tasks] : cells) {
    for (auto& t : tasks) assign_id(t, m.seed);
    std::sort(tasks.begin(), tasks.end(), [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
    const auto& row = *m.row(cell.first);
    if (auto q = row.quotas.find(cell.second); q != row.quotas.end()) {
      tasks.resize(std::min(tasks.size(), static_cast<std::size_t>(q->second)));
    }
    std::move(tasks.begin(), tasks.end(), std::back_inserter(out));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
  return out;
}

SampleRecord to_record(const DraftPair& d) {
  SampleRecord r;
  r.source_type = d.source_type;
  r.format = Format::kPaired;
  r.instruction = d.instruction;
  r.code = d.code;
  r.visual_refs = d.visual_refs;
  r.language_tag = d.language_tag;
  r.lineage = d.lineage;
  for (const auto& [k, v] : d.strategy_metadata) r.lineage.detail.emplace(k, v);
  r.status = Status::kSynthesized;
  return r;
}

std::vector<int> nonblank_lines(const std::string& code) {
  std::vector<int> out;
  const auto lines = split_lines(code);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!trim(lines[i]).empty()) out.push_back(static_cast<int>(i) + 1);
  }
  return out;
}

Snippet sample_snippet(const std::string& code, int k, std::uint64_t rng_seed) {
  if (k < 1) throw PreconditionError("snippet length k must be >= 1, got " + std::to_string(k));
  const auto nb = nonblank_lines(code);
  if (static_cast<std::size_t>(k) > nb.size()) {
    throw SnippetError("snippet of " + std::to_string(k) + " lines requested from a file with " +
                       std::to_string(nb.size()) + " non-blank lines");
  }
  SeededRng rng(std::to_string(rng_seed));
  const auto start = rng.below(nb.size() - static_cast<std::size_t>(k) + 1);
  Snippet s;
  s.first_line = nb[start];
  s.last_line = nb[start + static_cast<std::size_t>(k) - 1];
  const auto lines = split_lines(code);
  for (int i = s.first_line; i <= s.last_line; ++i) s.text += lines[static_cast<std::size_t>(i - 1)] + "\n";
  return s;
}

Synthesizer::Synthesizer(Gateway& gateway, const MatrixConfig& matrix, EventSink events)
    : gateway_(gateway), matrix_(matrix), events_(std::move(events)) {}

void Synthesizer::emit(const std::string& kind, const AttemptContext& ctx, const std::string& detail) {
  if (events_) events_({kind, ctx.task_id, detail});
}

std::string Synthesizer::language_for(SourceType t, const std::string& tag) const {
  if (t == SourceType::kMathematica || tag.rfind("wolfram", 0) == 0) return "wolfram";
  switch (t) {
    case SourceType::kSvg:
      return "svg";
    case SourceType::kWebUi:
    case SourceType::kGeneralArtifact:
    case SourceType::kScientificDemo:
      return "html";
    default:
      return "python";
  }
}

std::string Synthesizer::complete(GatewayRequest request, const AttemptContext& ctx) {
  request.role = JudgeRole::kSynthesizer;
  request.task_id = ctx.task_id;
  const auto& tpl = gateway_.templates().get(request.template_id);
  if (tpl.placeholders().count("feedback") != 0) {
    request.variables["feedback"] = ctx.feedback.value_or("");
  } else if (ctx.feedback) {
    request.corrective_note = "The previous attempt failed with:\n" + *ctx.feedback + "\nFix these problems.";
  }
  return gateway_.complete(request);
}

namespace {

GatewayRequest sections_request(std::string template_id, Variables vars, std::vector<std::string> sections,
                                std::string code_section, std::string language) {
  GatewayRequest r;
  r.template_id = std::move(template_id);
  r.variables = std::move(vars);
  r.expect.kind = OutputShape::Kind::kSections;
  r.expect.sections = std::move(sections);
  r.expect.code_section = std::move(code_section);
  r.expect.code_language = std::move(language);
  return r;
}

std::string require_section(const std::string& reply, const std::string& marker,
                            const std::vector<std::string>& markers, const std::string& template_id) {
  auto body = extract_section(reply, marker, markers);
  if (!body) throw MalformedGenerationError(template_id + ": reply has no usable " + marker + " section");
  return *body;
}

void require_paired(const SampleRecord& seed, const char* op) {
  if (seed.format != Format::kPaired || !seed.instruction) {
    throw PreconditionError(std::string(op) + " needs a paired seed; " + seed.record_id + " is code-only");
  }
}

Lineage child_lineage(const SampleRecord& seed, Strategy s, const AttemptContext& ctx) {
  Lineage l;
  l.parents = {seed.record_id};
  l.strategy = s;
  if (!ctx.task_id.empty()) l.detail["task_id"] = ctx.task_id;
  l.detail["attempt"] = std::to_string(ctx.attempt);
  return l;
}

}  // namespace

DraftPair Synthesizer::evolve(const SampleRecord& seed, const std::string& keyword, const AttemptContext& ctx) {
  require_paired(seed, "guided evolution");
  if (trim(keyword).empty()) throw PreconditionError("guided evolution needs a non-empty concept");
  const std::vector<std::string> markers = {kProblemMarker, kCodeMarker};
  const auto reply = complete(
      sections_request("synth-evolve", {{"concept", keyword}, {"instruction", *seed.instruction}, {"code", seed.code}},
                       markers, kCodeMarker, language_for(seed.source_type, seed.language_tag)),
      ctx);
  DraftPair d;
  d.instruction = require_section(reply, kProblemMarker, markers, "synth-evolve");
  d.code = require_section(reply, kCodeMarker, markers, "synth-evolve");
  d.lineage = child_lineage(seed, Strategy::kGuidedEvolution, ctx);
  d.lineage.concept_keyword = keyword;
  d.source_type = seed.source_type;
  d.language_tag = seed.language_tag;
  return d;
}

DraftPair Synthesizer::recontextualize(const SampleRecord& seed, const AttemptContext& ctx) {
  require_paired(seed, "re-contextualization");
  const std::vector<std::string> markers = {kProblemMarker, kCodeMarker};
  const auto reply = complete(sections_request("synth-recontext", {{"instruction", *seed.instruction}, {"code", seed.code}},
                                               markers, kCodeMarker, language_for(seed.source_type, seed.language_tag)),
                              ctx);
  DraftPair d;
  d.instruction = require_section(reply, kProblemMarker, markers, "synth-recontext");
  if (trim(d.instruction) == trim(*seed.instruction)) {
    throw MalformedGenerationError("synth-recontext: instruction echoed unchanged");
  }
  if (auto returned = extract_section(reply, kCodeMarker, markers); returned && *returned != trim(seed.code)) {
    d.strategy_metadata["code_overwritten"] = "true";
    emit("recontext_code_overwritten", ctx, "seed " + seed.record_id + ": model returned modified code");
  }
  d.code = seed.code;
  d.lineage = child_lineage(seed, Strategy::kRecontextualization, ctx);
  d.source_type = seed.source_type;
  d.language_tag = seed.language_tag;
  d.visual_refs = seed.visual_refs;
  return d;
}

DraftPair Synthesizer::reverse_instruct(const SampleRecord& ref, int k, std::uint64_t rng_seed,
                                        const AttemptContext& ctx) {
  const auto snippet = sample_snippet(ref.code, k, rng_seed);
  const std::vector<std::string> p = {kProblemMarker};
  // The instruction step never sees retry feedback: it concerns the code.
  const auto instr_reply =
      complete(sections_request("synth-reverse-instruction", {{"snippet", snippet.text}}, p, "", "python"),
               AttemptContext{ctx.task_id, ctx.attempt, std::nullopt});
  DraftPair d;
  d.instruction = require_section(instr_reply, kProblemMarker, p, "synth-reverse-instruction");

  const std::vector<std::string> c = {kCodeMarker};
  const auto code_reply = complete(
      sections_request("synth-reverse-code",
                       {{"instruction", d.instruction}, {"context", matrix_.reverse_use_context ? ref.code : ""}}, c,
                       kCodeMarker, language_for(ref.source_type, ref.language_tag)),
      ctx);
  d.code = require_section(code_reply, kCodeMarker, c, "synth-reverse-code");
  d.lineage = child_lineage(ref, Strategy::kReverseInstruction, ctx);
  d.lineage.detail["snippet_span"] = std::to_string(snippet.first_line) + "-" + std::to_string(snippet.last_line);
  d.lineage.detail["snippet_lines"] = std::to_string(k);
  d.lineage.detail["rng_seed"] = std::to_string(rng_seed);
  d.source_type = ref.source_type;
  d.language_tag = ref.language_tag;
  return d;
}

DraftPair Synthesizer::translate(const SampleRecord& seed, SourceType target, const AttemptContext& ctx) {
  require_paired(seed, "bidirectional translation");
  if (!matrix_.edge_allowed(seed.source_type, target)) {
    throw EdgeError("translation edge " + source_name(seed.source_type) + " -> " + source_name(target) +
                    " is not configured");
  }
  const std::string from = source_name(seed.source_type);
  const std::string to = source_name(target);
  const std::vector<std::string> p = {kProblemMarker};
  const auto instr_reply = complete(
      sections_request("synth-translate-instruction",
                       {{"source_domain", from}, {"target_domain", to}, {"instruction", *seed.instruction}}, p, "",
                       "python"),
      AttemptContext{ctx.task_id, ctx.attempt, std::nullopt});
  DraftPair d;
  d.instruction = require_section(instr_reply, kProblemMarker, p, "synth-translate-instruction");

  const auto* row = matrix_.row(target);
  d.language_tag = row != nullptr ? row->language_tag : "";
  const std::vector<std::string> c = {kCodeMarker};
  const auto code_reply =
      complete(sections_request("synth-translate-code",
                                {{"source_domain", from},
                                 {"target_domain", to},
                                 {"instruction", d.instruction},
                                 {"code", seed.code}},
                                c, kCodeMarker, language_for(target, d.language_tag)),
               ctx);
  d.code = require_section(code_reply, kCodeMarker, c, "synth-translate-code");
  d.lineage = child_lineage(seed, Strategy::kBidirectionalTranslation, ctx);
  d.lineage.detail["target_domain"] = to;
  d.source_type = target;
  return d;
}

DraftPair Synthesizer::run(const SynthesisTask& task, const std::vector<SampleRecord>& seeds) {
  if (seeds.size() != 1 || task.seed_record_ids.size() != 1 || seeds[0].record_id != task.seed_record_ids[0]) {
    throw PreconditionError("task " + task.task_id + ": expected exactly its one seed record");
  }
  const auto d = check_task(task, seeds[0].source_type, matrix_.max_retries);
  if (!d.empty()) throw PreconditionError("task " + task.task_id + ": " + d.front());
  const AttemptContext ctx{task.task_id, task.attempt, task.feedback};
  switch (task.strategy) {
    case Strategy::kGuidedEvolution:
      return evolve(seeds[0], *task.concept_keyword, ctx);
    case Strategy::kRecontextualization:
      return recontextualize(seeds[0], ctx);
    case Strategy::kReverseInstruction:
      return reverse_instruct(seeds[0], task.snippet_lines, task.rng_seed, ctx);
    case Strategy::kBidirectionalTranslation:
      return translate(seeds[0], *task.target_domain, ctx);
    case Strategy::kNone:
      break;
  }
  throw PreconditionError("task " + task.task_id + ": no strategy");
}

}  // namespace vizforge
