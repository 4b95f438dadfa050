// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/pipeline/pipeline.hpp"

#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "vizforge/common/errors.hpp"
#include "vizforge/reward/reward.hpp"
#include "vizforge/synthesis/synthesis.hpp"

namespace vizforge {
namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::kIngest: return "ingest";
    case Stage::kDecompose: return "decompose";
    case Stage::kSynth: return "synth";
    case Stage::kValidate: return "validate";
    case Stage::kReward: return "reward";
    case Stage::kExport: return "export";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view s) {
  for (const auto st : kAllStages) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

Json to_json(const RunSummary& s) {
  Json counters = Json::object();
  for (const auto& [stage, c] : s.counters) {
    counters[stage] = {{"accepted", c.accepted}, {"rejected", c.rejected}, {"retried", c.retried}};
  }
  Json j = {{"run_id", s.run_id},
            {"stages_run", s.stages_run},
            {"counters", counters},
            {"corpus",
             {{"records", s.corpus.records},
              {"candidates", s.corpus.candidates},
              {"retained", s.corpus.retained},
              {"dropped", s.corpus.dropped},
              {"judge_failed", s.corpus.judge_failed},
              {"pending", s.corpus.pending}}},
            {"corpus_digest", s.corpus_digest},
            {"complete", s.complete},
            {"noop", s.noop},
            {"interrupted", s.interrupted},
            {"events", s.events}};
  if (s.fatal_stage) j["fatal_stage"] = *s.fatal_stage;
  if (s.fatal_error) j["fatal_error"] = *s.fatal_error;
  return j;
}

CorpusCounts count_corpus(const CorpusStore& store) {
  CorpusCounts c;
  for (const auto& r : store.records()) {
    ++c.records;
    if (r.lineage.strategy == Strategy::kNone) continue;
    ++c.candidates;
    if (r.status == Status::kRetained) {
      ++c.retained;
    } else if (r.status == Status::kDropped) {
      if (r.judge_error) ++c.judge_failed;
      else ++c.dropped;
    } else {
      ++c.pending;
    }
  }
  return c;
}

std::unique_ptr<Gateway> make_gateway(const PipelineConfig& config, CorpusStore* store, bool stub,
                                      const std::map<JudgeRole, std::shared_ptr<Provider>>& overrides) {
  auto resolver = [store](const std::string& hash) {
    if (store == nullptr) throw NotFoundError("no artifact store for " + hash);
    auto a = store->resolve_artifact(hash);
    return Attachment{hash, a.media_kind, std::move(a.bytes)};
  };
  auto gw = std::make_unique<Gateway>(std::make_shared<TemplateStore>(config.template_dir), resolver);
  std::vector<std::string> bad;
  for (const auto role : {JudgeRole::kSynthesizer, JudgeRole::kTextJudge, JudgeRole::kVisionJudge}) {
    RoleSettings s;
    const auto it = config.roles.find(role);
    if (it != config.roles.end()) s = it->second;
    RoleConfig rc;
    rc.max_retries = s.max_retries;
    rc.backoff = std::chrono::milliseconds(s.backoff_ms);
    if (s.rate_per_second > 0) rc.limiter = std::make_shared<RateLimiter>(s.rate_per_second, s.burst);
    if (const auto o = overrides.find(role); o != overrides.end()) {
      rc.provider = o->second;
    } else if (stub || (it != config.roles.end() && s.provider == "stub")) {
      rc.provider = std::make_shared<StubProvider>(config.stub);
    } else if (it != config.roles.end() && s.provider == "http") {
      rc.provider = make_http_provider(s.http);
    } else {
      bad.push_back("gateway.roles." + std::string(to_string(role)) +
                    " (no provider configured; add one or pass --stub-gateway)");
      continue;
    }
    gw->set_role(role, std::move(rc));
  }
  if (!bad.empty()) throw ConfigError(std::move(bad));
  return gw;
}

namespace {

struct Interrupted {};

std::string pad(std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, n);
  return buf;
}

// Runs f(i) for i in [0, n) on up to `par` threads; rethrows the first
// exception once every worker has joined.
template <typename F>
void parallel_each(std::size_t n, int par, F&& f) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(par, 1)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

class Runner {
 public:
  Runner(const PipelineConfig& cfg, const RunOptions& opt, CorpusStore& store, RunHandle& run)
      : cfg_(cfg), opt_(opt), store_(store), run_(run) {
    parallel_ = opt.max_parallel.value_or(cfg.max_parallel);
  }

  std::vector<std::string> events;

  // Returns false when interrupted.
  bool run_stage(Stage s) {
    switch (s) {
      case Stage::kIngest: return ingest();
      case Stage::kDecompose: return decompose();
      case Stage::kSynth: return synth();
      case Stage::kValidate: return validate();
      case Stage::kReward: return reward();
      case Stage::kExport: return export_stage();
    }
    return true;
  }

 private:
  bool stopped() const { return opt_.stop != nullptr && opt_.stop->load(); }

  std::string created_by(const std::string& stage) const { return run_.run_id() + ":" + stage; }

  void event(std::string line) {
    std::lock_guard lock(events_mu_);
    if (events.size() < 1000) events.push_back(std::move(line));
  }

  Gateway& gateway() {
    if (!gateway_) {
      gateway_ = make_gateway(cfg_, &store_, opt_.stub_gateway, opt_.providers);
      gateway_->set_call_log(store_.root() / "runs" / run_.run_id() / "calls.jsonl", run_.run_id());
    }
    return *gateway_;
  }

  Executor& executor() {
    if (!executor_) {
      if (opt_.executor) {
        executor_ = opt_.executor;
      } else if (cfg_.executor == "noop") {
        executor_ = std::make_shared<NoopExecutor>(cfg_.stub.fail_marker);
      } else {
        SandboxOptions so;
        so.workspace_root = cfg_.workspace_root;
        so.created_by = created_by("validate");
        so.tail_bytes = cfg_.tail_bytes;
        so.max_parallel = parallel_;
        executor_ = std::make_shared<ProcessSandbox>(&store_, so);
      }
    }
    return *executor_;
  }

  Synthesizer& synthesizer() {
    if (!synth_) {
      synth_ = std::make_unique<Synthesizer>(gateway(), cfg_.matrix, [this](const SynthesisEvent& e) {
        event(e.kind + " " + e.task_id + (e.detail.empty() ? "" : ": " + e.detail));
      });
    }
    return *synth_;
  }

  // Plan over the raw seeds. Seeds only leave raw through decompose, so the
  // plan is stable once synthesis starts.
  const std::map<std::string, SynthesisTask>& plan() {
    if (!plan_) {
      plan_.emplace();
      seeds_.clear();
      for (auto& r : store_.records(Status::kRaw)) seeds_.emplace(r.record_id, std::move(r));
      std::vector<SampleRecord> raw;
      raw.reserve(seeds_.size());
      for (const auto& [id, r] : seeds_) raw.push_back(r);
      for (auto& t : plan_tasks(cfg_.matrix, raw)) plan_->emplace(t.task_id, std::move(t));
    }
    return *plan_;
  }

  std::vector<SampleRecord> seeds_for(const SynthesisTask& t) const {
    std::vector<SampleRecord> out;
    for (const auto& id : t.seed_record_ids) {
      if (auto it = seeds_.find(id); it != seeds_.end()) {
        out.push_back(it->second);
      } else if (auto r = store_.get(id)) {
        out.push_back(*r);
      } else {
        throw PreconditionError("task " + t.task_id + ": seed " + id + " is not in the store");
      }
    }
    return out;
  }

  // Generates a draft for `task`, retrying malformed replies up to the
  // matrix retry budget. Returns the stored id or nullopt after a reject.
  std::optional<std::string> generate(SynthesisTask task, StageCounters& delta) {
    const auto seeds = seeds_for(task);
    std::string last_error;
    for (; task.attempt <= cfg_.matrix.max_retries; ++task.attempt) {
      try {
        auto draft = synthesizer().run(task, seeds);
        return store_.store_record(to_record(draft)).record_id;
      } catch (const MalformedGenerationError& e) {
        last_error = e.what();
        task.feedback = std::string("The previous reply was malformed: ") + e.what();
        ++delta.retried;
      } catch (const RejectedRecordError& e) {
        last_error = e.what();
        break;
      }
    }
    store_.append_reject("synth", {{"task_id", task.task_id}, {"run_id", run_.run_id()}, {"error", last_error}});
    ++delta.rejected;
    return std::nullopt;
  }

  void merge(const std::string& stage, const StageCounters& d) {
    auto& c = run_.counters(stage);
    c.accepted += d.accepted;
    c.rejected += d.rejected;
    c.retried += d.retried;
  }

  // ingest: cursor "<source:04>|<item key>", "~" marks a finished source.
  bool ingest() {
    const std::string stage = "ingest";
    const auto cursor = run_.checkpoint(stage).cursor;
    std::size_t first = 0;
    std::string after;
    if (!cursor.empty()) {
      first = std::stoul(cursor.substr(0, 4));
      after = cursor.substr(5);
      if (after == "~") {
        ++first;
        after.clear();
      }
    }
    for (std::size_t i = first; i < cfg_.sources.size(); ++i) {
      IngestOptions io;
      io.created_by = created_by(stage);
      if (i == first) io.start_after = after;
      int since = 0;
      std::string last;
      io.on_item = [&](const std::string& key) {
        last = key;
        if (++since >= cfg_.checkpoint_every) {
          run_.commit_checkpoint(stage, pad(i, 4) + "|" + key);
          since = 0;
          if (stopped()) throw Interrupted{};
        }
      };
      IngestStats st;
      try {
        st = ingest_batch(store_, cfg_.sources[i], io);
      } catch (const Interrupted&) {
        return false;
      }
      auto& c = run_.counters(stage);
      c.accepted += st.stored;
      c.rejected += st.malformed;
      run_.commit_checkpoint(stage, pad(i, 4) + "|~");
      if (stopped()) return false;
    }
    run_.mark_stage_done(stage);
    return true;
  }

  bool decomposable(const SampleRecord& r) const {
    return r.format == Format::kCodeOnly && r.lineage.strategy == Strategy::kNone &&
           !r.lineage.detail.count("origin_record_id") && cfg_.decompose_sources.count(r.source_type) &&
           adapter_for(r.language_tag) != nullptr;
  }

  bool decompose() {
    const std::string stage = "decompose";
    const auto cursor = run_.checkpoint(stage).cursor;
    std::vector<SampleRecord> todo;
    for (auto& r : store_.records(Status::kRaw)) {
      if (r.record_id > cursor && decomposable(r)) todo.push_back(std::move(r));
    }
    int since = 0;
    for (std::size_t i = 0; i < todo.size(); ++i) {
      const auto& origin = todo[i];
      StageCounters delta;
      std::vector<std::string> warnings;
      std::vector<SemanticUnit> units;
      bool parsed = true;
      try {
        units = adapter_for(origin.language_tag)->parse_units(origin.code, cfg_.decompose, origin.record_id, &warnings);
      } catch (const ParseError& e) {
        store_.append_reject(stage, {{"record_id", origin.record_id}, {"run_id", run_.run_id()}, {"error", e.what()}});
        ++delta.rejected;
        parsed = false;
      }
      for (const auto& w : warnings) event("decompose_warning " + origin.record_id + ": " + w);
      const bool whole = units.size() == 1 && trim(units[0].excerpt) == trim(origin.code);
      if (parsed && !units.empty() && !whole) {
        for (const auto& u : units) {
          SampleRecord rec;
          rec.source_type = origin.source_type;
          rec.format = Format::kCodeOnly;
          rec.code = u.excerpt;
          rec.language_tag = origin.language_tag;
          rec.lineage.detail = {{"origin_record_id", origin.record_id},
                                {"class_name", u.class_name},
                                {"span", std::to_string(u.start_line) + "-" + std::to_string(u.end_line)},
                                {"template_id", cfg_.decompose.template_id}};
          try {
            if (store_.store_record(std::move(rec)).inserted) ++delta.accepted;
          } catch (const RejectedRecordError& e) {
            store_.append_reject(stage, {{"record_id", origin.record_id}, {"unit", u.class_name}, {"error", e.what()}});
            ++delta.rejected;
          }
        }
        auto updated = origin;
        updated.status = Status::kDecomposed;
        store_.supersede(std::move(updated));
      }
      merge(stage, delta);
      if (++since >= cfg_.checkpoint_every || i + 1 == todo.size()) {
        run_.commit_checkpoint(stage, origin.record_id);
        since = 0;
        if (stopped()) return false;
      }
    }
    write_units();
    run_.mark_stage_done(stage);
    return true;
  }

  void write_units() {
    std::string out;
    for (const auto& r : store_.records(Status::kDecomposed)) {
      const auto* adapter = adapter_for(r.language_tag);
      if (adapter == nullptr) continue;
      try {
        for (const auto& u : adapter->parse_units(r.code, cfg_.decompose, r.record_id, nullptr)) {
          out += canonical_dump(to_json(u, cfg_.decompose.template_id)) + "\n";
        }
      } catch (const ParseError&) {
      }
    }
    fs::create_directories(cfg_.export_dir / run_.run_id());
    write_file_atomic(cfg_.export_dir / run_.run_id() / "units.jsonl", out);
  }

  bool synth() {
    const std::string stage = "synth";
    const auto cursor = run_.checkpoint(stage).cursor;
    synthesizer();
    std::vector<const SynthesisTask*> todo;
    for (const auto& [id, t] : plan()) {
      if (id > cursor) todo.push_back(&t);
    }
    const std::size_t batch = std::max<std::size_t>(1, static_cast<std::size_t>(parallel_));
    std::size_t since = 0;
    for (std::size_t start = 0; start < todo.size(); start += batch) {
      const std::size_t n = std::min(batch, todo.size() - start);
      std::vector<StageCounters> deltas(n);
      parallel_each(n, parallel_, [&](std::size_t k) {
        if (generate(*todo[start + k], deltas[k])) ++deltas[k].accepted;
      });
      for (const auto& d : deltas) merge(stage, d);
      since += n;
      if (since >= static_cast<std::size_t>(cfg_.checkpoint_every) || start + n == todo.size()) {
        run_.commit_checkpoint(stage, todo[start + n - 1]->task_id);
        since = 0;
        if (stopped()) return false;
      }
    }
    run_.mark_stage_done(stage);
    return true;
  }

  void validate_one(const SampleRecord& rec, StageCounters& delta) {
    const auto* row = cfg_.matrix.row(rec.source_type);
    if (row == nullptr) {
      throw PreconditionError("record " + rec.record_id + ": source type has no matrix row");
    }
    auto updated = rec;
    if (row->validation_profile == kNoProfile) {
      updated.status = Status::kValidated;
      store_.supersede(std::move(updated));
      ++delta.accepted;
      return;
    }
    auto result = executor().execute(rec.code, cfg_.profiles.at(row->validation_profile));
    if (result.passed) {
      updated.status = Status::kValidated;
      updated.validation = std::move(result);
      store_.supersede(std::move(updated));
      ++delta.accepted;
      return;
    }
    const auto& d = rec.lineage.detail;
    const auto task_it = d.count("task_id") ? plan().find(d.at("task_id")) : plan().end();
    if (task_it != plan().end()) {
      auto task = task_it->second;
      task.attempt = d.count("attempt") ? std::stoi(d.at("attempt")) : 0;
      const auto decision = route_failure(task, result, cfg_.matrix.max_retries, &delta);
      if (decision.kind == RetryDecision::Kind::kRetry) {
        task.attempt += 1;
        task.feedback = decision.feedback;
        // The replacement is stored before the failed record is dropped so a
        // crash in between leaves the retry reachable from the next sweep.
        generate(task, delta);
      }
    } else {
      ++delta.rejected;
      event("validate_unplanned " + rec.record_id);
    }
    updated.status = Status::kDropped;
    updated.validation = std::move(result);
    store_.supersede(std::move(updated));
  }

  // validate: sweeps until no synthesized record is left; retries land in
  // the store as new synthesized records. Cursor "<sweep:04>|<record id>".
  bool validate() {
    const std::string stage = "validate";
    const auto cursor = run_.checkpoint(stage).cursor;
    // Lazy members are built here, before any worker thread touches them.
    plan();
    executor();
    synthesizer();
    std::size_t sweep = 0;
    std::string after;
    if (!cursor.empty()) {
      sweep = std::stoul(cursor.substr(0, 4));
      after = cursor.substr(5);
    }
    const std::size_t batch = std::max<std::size_t>(1, static_cast<std::size_t>(parallel_));
    std::size_t since = 0;
    for (;;) {
      const auto ids = store_.record_ids(Status::kSynthesized);
      if (ids.empty()) break;
      auto it = std::upper_bound(ids.begin(), ids.end(), after);
      if (it == ids.end()) {
        ++sweep;
        after.clear();
        continue;
      }
      std::vector<SampleRecord> todo;
      for (; it != ids.end() && todo.size() < batch; ++it) todo.push_back(*store_.get(*it));
      std::vector<StageCounters> deltas(todo.size());
      parallel_each(todo.size(), parallel_, [&](std::size_t k) { validate_one(todo[k], deltas[k]); });
      for (const auto& d : deltas) merge(stage, d);
      after = todo.back().record_id;
      since += todo.size();
      if (since >= static_cast<std::size_t>(cfg_.checkpoint_every)) {
        run_.commit_checkpoint(stage, pad(sweep, 4) + "|" + after);
        since = 0;
        if (stopped()) return false;
      }
    }
    run_.mark_stage_done(stage);
    return true;
  }

  bool reward() {
    const std::string stage = "reward";
    const auto cursor = run_.checkpoint(stage).cursor;
    RewardJudge judge(gateway(), {}, [this](std::string_view kind, const Json& detail) {
      event(std::string(kind) + " " + canonical_dump(detail));
    });
    std::vector<std::string> todo;
    for (const auto& id : store_.record_ids(Status::kValidated)) {
      if (id > cursor) todo.push_back(id);
    }
    const std::size_t batch = std::max<std::size_t>(1, static_cast<std::size_t>(parallel_));
    std::size_t since = 0;
    for (std::size_t start = 0; start < todo.size(); start += batch) {
      const std::size_t n = std::min(batch, todo.size() - start);
      std::vector<StageCounters> deltas(n);
      parallel_each(n, parallel_, [&](std::size_t k) {
        auto rec = *store_.get(todo[start + k]);
        const auto* row = cfg_.matrix.row(rec.source_type);
        if (row == nullptr) throw PreconditionError("record " + rec.record_id + ": source type has no matrix row");
        try {
          rec.reward = judge.score_sample(rec, row->vision_reward);
          rec.status = Status::kRewarded;
          ++deltas[k].accepted;
        } catch (const JudgeFormatError& e) {
          rec.judge_error = e.what();
          rec.status = Status::kDropped;
          ++deltas[k].rejected;
        }
        store_.supersede(std::move(rec));
      });
      for (const auto& d : deltas) merge(stage, d);
      since += n;
      if (since >= static_cast<std::size_t>(cfg_.checkpoint_every) || start + n == todo.size()) {
        run_.commit_checkpoint(stage, todo[start + n - 1]);
        since = 0;
        if (stopped()) return false;
      }
    }
    run_.mark_stage_done(stage);
    return true;
  }

  // export: applies the retention filter, then writes the dataset package
  // under <exports>/<run_id>/.
  bool export_stage() {
    const std::string stage = "export";
    auto rewarded = store_.records(Status::kRewarded);
    StageCounters delta;
    const auto result = apply_filter(rewarded, cfg_.matrix, &delta);
    std::map<std::string, Status> next;
    for (const auto& id : result.retained) next[id] = Status::kRetained;
    for (const auto& id : result.dropped) next[id] = Status::kDropped;
    for (const auto& id : result.judge_failed) next[id] = Status::kDropped;
    for (auto& r : rewarded) {
      r.status = next.at(r.record_id);
      store_.supersede(r);
    }
    merge(stage, delta);
    store_.sync();

    const auto dir = cfg_.export_dir / run_.run_id();
    fs::create_directories(dir);
    std::string dataset;
    std::vector<SampleRecord> judged;
    for (const auto& r : store_.records()) {
      if (r.status == Status::kRetained) dataset += canonical_dump(to_json(r)) + "\n";
      if (r.reward || r.judge_error) judged.push_back(r);
    }
    write_file_atomic(dir / "dataset.jsonl", dataset);
    write_reward_report(dir / "reward_report.jsonl", judged, cfg_.matrix);

    // Judged records with visuals are queued for human spot checks.
    ReviewStore review(cfg_.review_dir, cfg_.review);
    for (const auto& r : judged) {
      auto media = r.reward ? judge_visuals(r) : std::vector<std::string>{};
      if (media.empty()) continue;
      review.add_item({review_item_id(ReviewKind::kRewardSpotcheck, r.record_id), ReviewKind::kRewardSpotcheck,
                       r.record_id, std::move(media), r.instruction.value_or("")});
    }
    run_.mark_stage_done(stage);
    return true;
  }

  const PipelineConfig& cfg_;
  const RunOptions& opt_;
  CorpusStore& store_;
  RunHandle& run_;
  int parallel_ = 1;
  std::mutex events_mu_;
  std::unique_ptr<Gateway> gateway_;
  std::shared_ptr<Executor> executor_;
  std::unique_ptr<Synthesizer> synth_;
  std::optional<std::map<std::string, SynthesisTask>> plan_;
  std::map<std::string, SampleRecord> seeds_;
};

std::optional<std::string> finished_run(const fs::path& store_root, const std::string& hash,
                                        const std::optional<std::string>& run_id) {
  std::error_code ec;
  const auto runs = store_root / "runs";
  if (!fs::is_directory(runs, ec)) return std::nullopt;
  for (const auto& entry : fs::directory_iterator(runs, ec)) {
    const auto path = entry.path() / "manifest.json";
    if (!fs::is_regular_file(path, ec)) continue;
    try {
      const auto m = manifest_from_json(Json::parse(read_file(path)));
      if (!m.complete) continue;
      if (run_id ? m.run_id == *run_id : m.config_hash == hash) return m.run_id;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

}  // namespace

RunSummary run_pipeline(const PipelineConfig& config, const RunOptions& options) {
  const Json identity = {{"config", config.document}, {"stub_gateway", options.stub_gateway}};
  CorpusStore store(config.store_root);
  RunSummary summary;

  if (auto done = finished_run(config.store_root, config_hash(identity), options.run_id)) {
    summary.run_id = *done;
    summary.noop = true;
    summary.complete = true;
    summary.counters = manifest_from_json(Json::parse(read_file(config.store_root / "runs" / *done / "manifest.json")))
                           .counters;
    summary.corpus = count_corpus(store);
    summary.corpus_digest = store.corpus_digest();
    return summary;
  }

  auto run = open_run(config.store_root, identity, options.run_id);
  summary.run_id = run.run_id();
  if (options.checkpoint_hook) run.set_checkpoint_hook(options.checkpoint_hook);
  Runner runner(config, options, store, run);

  const std::vector<Stage> stages =
      options.stages.empty() ? std::vector<Stage>(std::begin(kAllStages), std::end(kAllStages)) : options.stages;
  for (const auto s : stages) {
    const std::string name(to_string(s));
    if (run.checkpoint(name).done) continue;
    summary.stages_run.push_back(name);
    try {
      if (!runner.run_stage(s)) {
        summary.interrupted = true;
        break;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const LockError&) {
      throw;
    } catch (const std::exception& e) {
      summary.fatal_stage = name;
      summary.fatal_error = e.what();
      break;
    }
  }
  store.sync();

  bool all_done = true;
  for (const auto s : kAllStages) all_done = all_done && run.checkpoint(std::string(to_string(s))).done;
  if (all_done && !run.manifest().complete) run.mark_complete();
  run.save();

  summary.complete = run.manifest().complete;
  summary.counters = run.manifest().counters;
  summary.corpus = count_corpus(store);
  summary.corpus_digest = store.corpus_digest();
  summary.events = std::move(runner.events);
  return summary;
}

}  // namespace vizforge
