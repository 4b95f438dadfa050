// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"
#include "vizforge/common/errors.hpp"
#include "vizforge/pipeline/pipeline.hpp"

namespace vizforge {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;
using testing::write_text;

std::string chart_item(int i) {
  return Json{{"instruction", "Plot series " + std::to_string(i) + " as a line chart"},
              {"code", "import matplotlib.pyplot as plt\nplt.plot([" + std::to_string(i) + ", 2, 3])\n"
                       "plt.savefig('out.png')\n"}}
      .dump();
}

// A store with `n` paired matplotlib items and one animation file.
Json make_config(const TempDir& dir, int n, Json gateway = Json::object()) {
  std::string charts;
  for (int i = 0; i < n; ++i) charts += chart_item(i) + "\n";
  write_text(dir / "src/charts.jsonl", charts);
  std::ifstream in(testing::fixture("decompose/three_scenes.py"));
  const std::string scenes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  write_text(dir / "src/scenes.jsonl", Json{{"code", scenes}}.dump() + "\n");
  Json cfg = {{"store", "store"},
              {"templates", VIZFORGE_TEMPLATE_DIR},
              {"max_parallel", 2},
              {"checkpoint_every", 2},
              {"sources",
               {{{"source_type", "matplotlib"}, {"locator", "src/charts.jsonl"}},
                {{"source_type", "animation"}, {"locator", "src/scenes.jsonl"}, {"field_map", {{"code", "code"}}}}}},
              {"sandbox", {{"executor", "noop"}}}};
  if (!gateway.empty()) cfg["gateway"] = gateway;
  return cfg;
}

PipelineConfig parse(const TempDir& dir, const Json& cfg) { return config_from_json(cfg, dir.path()); }

RunOptions stub_options() {
  RunOptions o;
  o.stub_gateway = true;
  return o;
}

// Independent view of the corpus: the highest revision of every record,
// read straight from the shard files.
std::map<std::string, Json> scan_shards(const fs::path& store) {
  std::map<std::string, Json> latest;
  for (const auto& e : fs::directory_iterator(store / "corpus")) {
    std::ifstream in(e.path());
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      auto j = Json::parse(line);
      const auto id = j.at("record_id").get<std::string>();
      auto it = latest.find(id);
      if (it == latest.end() || it->second.at("revision").get<int>() < j.at("revision").get<int>()) latest[id] = j;
    }
  }
  return latest;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

TEST(PipelineConfig, CollectsEveryProblem) {
  TempDir dir;
  Json cfg = {{"templates", (dir / "no-templates").string()},
              {"bogus", 1},
              {"max_parallel", 0},
              {"sources", {{{"source_type", "nope"}, {"locator", "x.jsonl"}}}},
              {"sandbox", {{"executor", "docker"}}},
              {"gateway", {{"roles", {{"synthesizer", {{"provider", "http"}}}}}}}};
  try {
    config_from_json(cfg, dir.path());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const auto keys = e.offending_keys();
    auto has = [&](const std::string& prefix) {
      return std::any_of(keys.begin(), keys.end(), [&](const std::string& k) { return k.rfind(prefix, 0) == 0; });
    };
    EXPECT_TRUE(has("store (missing)"));
    EXPECT_TRUE(has("bogus (unknown key)"));
    EXPECT_TRUE(has("max_parallel"));
    EXPECT_TRUE(has("sources[0].source_type"));
    EXPECT_TRUE(has("sandbox.executor"));
    EXPECT_TRUE(has("gateway.roles.synthesizer (http provider needs"));
    EXPECT_TRUE(has("templates (missing template file " + (dir / "no-templates" / "synth-evolve.txt").string()));
  }
}

TEST(PipelineConfig, OneMissingTemplateIsNamed) {
  TempDir dir;
  fs::create_directories(dir / "t");
  for (const auto& e : fs::directory_iterator(VIZFORGE_TEMPLATE_DIR)) {
    fs::copy_file(e.path(), dir / ("t/" + e.path().filename().string()), fs::copy_options::none);
  }
  fs::remove(dir / "t/reward-edit.txt");
  Json cfg = make_config(dir, 1);
  cfg["templates"] = "t";
  try {
    config_from_json(cfg, dir.path());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    ASSERT_EQ(e.offending_keys().size(), 1u);
    EXPECT_NE(e.offending_keys()[0].find((dir / "t/reward-edit.txt").string()), std::string::npos);
  }
}

TEST(PipelineConfig, ResolvesPathsAndDefaults) {
  TempDir dir;
  const auto c = parse(dir, make_config(dir, 1));
  EXPECT_EQ(c.store_root, dir / "store");
  EXPECT_EQ(c.export_dir, dir / "store/exports");
  ASSERT_EQ(c.sources.size(), 2u);
  EXPECT_EQ(c.sources[0].locator, (dir / "src/charts.jsonl").string());
  EXPECT_EQ(c.sources[0].field_map.instruction, std::optional<std::string>("instruction"));
  EXPECT_EQ(c.sources[1].language_tag, "python-manim");
  EXPECT_FALSE(c.sources[1].field_map.instruction.has_value());
  EXPECT_EQ(c.executor, "noop");
}

TEST(PipelineConfig, MatrixRowNeedsKnownProfile) {
  TempDir dir;
  Json cfg = make_config(dir, 1);
  cfg["matrix"] = {{"rows", {{"matplotlib", {{"validation", "gpu-render"}, {"reward", "vlm"}}}}}};
  cfg["sources"].erase(1);
  try {
    config_from_json(cfg, dir.path());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("matrix.rows.matplotlib.validation"), std::string::npos);
  }
}

TEST(Pipeline, FullRunPartitionsCandidates) {
  TempDir dir;
  const auto cfg = parse(dir, make_config(dir, 12));
  const auto s = run_pipeline(cfg, stub_options());
  ASSERT_FALSE(s.fatal_error.has_value()) << *s.fatal_error;
  EXPECT_TRUE(s.complete);
  EXPECT_FALSE(s.interrupted);
  EXPECT_EQ(s.stages_run.size(), 6u);
  EXPECT_EQ(s.corpus.pending, 0);
  EXPECT_GT(s.corpus.candidates, 0);
  EXPECT_EQ(s.corpus.retained + s.corpus.dropped + s.corpus.judge_failed, s.corpus.candidates);

  // Shard scan oracle.
  const auto latest = scan_shards(cfg.store_root);
  std::int64_t retained = 0, candidates = 0;
  for (const auto& [id, j] : latest) {
    if (j.at("lineage").at("strategy") != "none") ++candidates;
    if (j.at("status") == "retained") ++retained;
  }
  EXPECT_EQ(static_cast<std::int64_t>(latest.size()), s.corpus.records);
  EXPECT_EQ(candidates, s.corpus.candidates);
  EXPECT_EQ(retained, s.corpus.retained);

  const auto out = cfg.export_dir / s.run_id;
  EXPECT_EQ(count_lines(out / "dataset.jsonl"), static_cast<std::size_t>(retained));
  EXPECT_EQ(count_lines(out / "reward_report.jsonl"),
            static_cast<std::size_t>(s.corpus.retained + s.corpus.judge_failed) +
                static_cast<std::size_t>(std::count_if(latest.begin(), latest.end(), [](const auto& kv) {
                  return kv.second.at("status") == "dropped" && kv.second.contains("reward") &&
                         !kv.second.at("reward").is_null();
                })));
  EXPECT_EQ(s.counters.at("ingest").accepted, 13);
  EXPECT_TRUE(fs::exists(cfg.store_root / "runs" / s.run_id / "calls.jsonl"));
}

TEST(Pipeline, DecomposeSplitsSceneFile) {
  TempDir dir;
  const auto cfg = parse(dir, make_config(dir, 1));
  RunOptions o = stub_options();
  o.stages = {Stage::kIngest, Stage::kDecompose};
  const auto s = run_pipeline(cfg, o);
  ASSERT_FALSE(s.fatal_error.has_value()) << *s.fatal_error;
  EXPECT_FALSE(s.complete);

  CorpusStore store(cfg.store_root);
  const auto decomposed = store.records(Status::kDecomposed);
  ASSERT_EQ(decomposed.size(), 1u);
  std::vector<std::string> classes;
  for (const auto& r : store.records(Status::kRaw)) {
    if (r.lineage.detail.count("origin_record_id")) {
      EXPECT_EQ(r.lineage.detail.at("origin_record_id"), decomposed[0].record_id);
      classes.push_back(r.lineage.detail.at("class_name"));
    }
  }
  std::sort(classes.begin(), classes.end());
  EXPECT_EQ(classes, (std::vector<std::string>{"Intro", "Spin"}));
  EXPECT_EQ(count_lines(cfg.export_dir / s.run_id / "units.jsonl"), 2u);
  EXPECT_EQ(s.counters.at("decompose").accepted, 2);
}

TEST(Pipeline, CompletedRunIsNoop) {
  TempDir dir;
  const auto cfg = parse(dir, make_config(dir, 4));
  const auto first = run_pipeline(cfg, stub_options());
  ASSERT_TRUE(first.complete);
  const auto shards = scan_shards(cfg.store_root);
  const auto second = run_pipeline(cfg, stub_options());
  EXPECT_TRUE(second.noop);
  EXPECT_EQ(second.run_id, first.run_id);
  EXPECT_EQ(second.corpus_digest, first.corpus_digest);
  EXPECT_EQ(scan_shards(cfg.store_root), shards);

  RunOptions named = stub_options();
  named.run_id = first.run_id;
  EXPECT_TRUE(run_pipeline(cfg, named).noop);
}

TEST(Pipeline, StopAndResumeMatchesUninterrupted) {
  TempDir a, b;
  const auto cfg_a = parse(a, make_config(a, 10));
  const auto cfg_b = parse(b, make_config(b, 10));
  const auto whole = run_pipeline(cfg_a, stub_options());
  ASSERT_TRUE(whole.complete);

  for (int stop_at : {1, 4, 9}) {
    std::atomic<bool> stop{false};
    int seen = 0;
    RunOptions o = stub_options();
    o.stop = &stop;
    o.checkpoint_hook = [&](const std::string&, const std::string&) {
      if (++seen == stop_at) stop = true;
    };
    const auto part = run_pipeline(cfg_b, o);
    if (part.complete) break;
    EXPECT_TRUE(part.interrupted);
  }
  const auto rest = run_pipeline(cfg_b, stub_options());
  EXPECT_TRUE(rest.complete);
  EXPECT_EQ(rest.corpus_digest, whole.corpus_digest);
}

TEST(Pipeline, StagesRunSeparatelyMatchOneRun) {
  TempDir a, b;
  const auto cfg_a = parse(a, make_config(a, 6));
  const auto cfg_b = parse(b, make_config(b, 6));
  const auto whole = run_pipeline(cfg_a, stub_options());
  std::string run_id;
  for (const auto st : kAllStages) {
    RunOptions o = stub_options();
    o.stages = {st};
    const auto s = run_pipeline(cfg_b, o);
    ASSERT_FALSE(s.fatal_error.has_value()) << *s.fatal_error;
    ASSERT_EQ(s.stages_run, std::vector<std::string>{std::string(to_string(st))});
    if (!run_id.empty()) EXPECT_EQ(s.run_id, run_id);
    run_id = s.run_id;
    EXPECT_EQ(s.complete, st == Stage::kExport);
  }
  EXPECT_EQ(CorpusStore(cfg_b.store_root).corpus_digest(), whole.corpus_digest);
}

TEST(Pipeline, ValidationFailuresRetryThenSettle) {
  TempDir dir;
  Json cfg = make_config(dir, 12, {{"stub", {{"fail_percent", 50}}}});
  const auto s = run_pipeline(parse(dir, cfg), stub_options());
  ASSERT_FALSE(s.fatal_error.has_value()) << *s.fatal_error;
  EXPECT_TRUE(s.complete);
  EXPECT_GT(s.counters.at("validate").retried, 0);
  EXPECT_EQ(s.corpus.pending, 0);
  EXPECT_EQ(s.corpus.retained + s.corpus.dropped + s.corpus.judge_failed, s.corpus.candidates);
  // No retry chain exceeds the budget.
  CorpusStore store(dir / "store");
  for (const auto& r : store.records()) {
    if (r.lineage.detail.count("attempt")) EXPECT_LE(std::stoi(r.lineage.detail.at("attempt")), 3);
  }
}

TEST(Pipeline, MalformedJudgeRepliesBecomeJudgeFailed) {
  TempDir dir;
  Json cfg = make_config(dir, 8);
  const auto parsed = parse(dir, cfg);
  RunOptions o = stub_options();
  auto prose = std::make_shared<ScriptedProvider>([](const ProviderCall&) { return std::string("no scores today"); });
  o.providers[JudgeRole::kTextJudge] = prose;
  o.providers[JudgeRole::kVisionJudge] = prose;
  const auto s = run_pipeline(parsed, o);
  ASSERT_FALSE(s.fatal_error.has_value()) << *s.fatal_error;
  EXPECT_EQ(s.corpus.retained, 0);
  EXPECT_GT(s.corpus.judge_failed, 0);
  EXPECT_EQ(s.corpus.dropped + s.corpus.judge_failed, s.corpus.candidates);
}

TEST(Pipeline, ExecutorFailureIsFatalForItsStage) {
  struct Broken : Executor {
    ValidationResult execute(const std::string&, const EnvProfile&) override { throw StorageError("disk full"); }
  };
  TempDir dir;
  RunOptions o = stub_options();
  o.executor = std::make_shared<Broken>();
  const auto s = run_pipeline(parse(dir, make_config(dir, 3)), o);
  EXPECT_EQ(s.fatal_stage, std::optional<std::string>("validate"));
  EXPECT_NE(s.fatal_error->find("disk full"), std::string::npos);
  EXPECT_FALSE(s.complete);
}

TEST(Pipeline, MissingProviderIsConfigError) {
  TempDir dir;
  EXPECT_THROW(run_pipeline(parse(dir, make_config(dir, 2)), RunOptions{}), ConfigError);
}

TEST(Pipeline, SummaryJson) {
  RunSummary s;
  s.run_id = "r1";
  s.counters["ingest"] = {3, 1, 0};
  s.fatal_stage = "synth";
  s.fatal_error = "boom";
  const auto j = to_json(s);
  EXPECT_EQ(j["counters"]["ingest"]["accepted"], 3);
  EXPECT_EQ(j["fatal_stage"], "synth");
  EXPECT_EQ(j["corpus"]["candidates"], 0);
}

TEST(Pipeline, StageNamesRoundTrip) {
  for (const auto s : kAllStages) EXPECT_EQ(parse_stage(to_string(s)), s);
  EXPECT_FALSE(parse_stage("publish"));
}

// Marks every run as passing with one fake image artifact.
struct OneArtifact : Executor {
  ValidationResult execute(const std::string&, const EnvProfile&) override {
    ValidationResult v;
    v.passed = true;
    v.exit_code = 0;
    v.artifacts = {std::string(64, 'a')};
    return v;
  }
};

Json bench_config(const TempDir& dir, int manim, int wolfram) {
  std::string lines;
  for (int i = 0; i < manim + wolfram; ++i) {
    const bool m = i < manim;
    lines += Json{{"task_id", (m ? "m" : "w") + std::to_string(i)},
                  {"engine", m ? "manim" : "wolfram"},
                  {"instruction", "Visualize theorem " + std::to_string(i)},
                  {"reference_code", m ? "class S(Scene):\n    def construct(self):\n        pass\n" : "Plot[x, {x, 0, 1}]"}}
                 .dump() +
             "\n";
  }
  write_text(dir / "bench/tasks.jsonl", lines);
  Json cfg = make_config(dir, 1);
  cfg["bench"] = {{"tasks", "bench/tasks.jsonl"}, {"out", "bench/out"}};
  cfg["review"] = {{"annotators", {"ann"}}};
  return cfg;
}

TEST(Bench, RunScoresQueuesAndReports) {
  TempDir dir;
  const auto cfg = parse(dir, bench_config(dir, 3, 2));
  BenchRunOptions o;
  o.stub_gateway = true;
  o.executor = std::make_shared<OneArtifact>();
  const auto out = run_bench(cfg, o);
  ASSERT_EQ(out.records.size(), 5u);
  ASSERT_EQ(out.scores.size(), 5u);
  EXPECT_EQ(out.review_items_added, 5);
  EXPECT_EQ(out.report.engines.at("manim").records, 3);
  EXPECT_EQ(out.report.engines.at("wolfram").records, 2);
  EXPECT_EQ(out.report.engines.at("manim").faith_population, 0);
  EXPECT_TRUE(fs::exists(cfg.bench_dir / "report.json"));
  EXPECT_TRUE(fs::exists(cfg.bench_dir / "report.txt"));

  // A faith score submitted through the review store reaches the next report.
  {
    ReviewStore review(cfg.review_dir, cfg.review);
    review.submit(review_item_id(ReviewKind::kBenchFaith, "m0"), "ann", 4, nullptr);
  }
  const auto again = refresh_bench_report(cfg);
  EXPECT_EQ(again.engines.at("manim").faith_population, 1);
  EXPECT_EQ(again.engines.at("manim").mean_without_faith, out.report.engines.at("manim").mean_without_faith);
  EXPECT_EQ(again.engines.at("wolfram").mean, out.report.engines.at("wolfram").mean);

  // Rerun resumes from the journals: no new judge calls.
  const auto calls = count_lines(cfg.bench_dir / "calls.jsonl");
  const auto rerun = run_bench(cfg, o);
  EXPECT_EQ(count_lines(cfg.bench_dir / "calls.jsonl"), calls);
  EXPECT_EQ(rerun.review_items_added, 0);
}

TEST(Bench, NothingExecutableIsEmptyReport) {
  struct Fails : Executor {
    ValidationResult execute(const std::string&, const EnvProfile&) override {
      ValidationResult v;
      v.exit_code = 1;
      return v;
    }
  };
  TempDir dir;
  const auto cfg = parse(dir, bench_config(dir, 1, 1));
  BenchRunOptions o;
  o.stub_gateway = true;
  o.executor = std::make_shared<Fails>();
  // Unexecuted records still score (overall 0), so the report is not empty.
  const auto out = run_bench(cfg, o);
  EXPECT_EQ(out.report.engines.at("manim").exec_rate, 0.0);
  EXPECT_EQ(out.report.engines.at("manim").mean, 0.0);
}

TEST(Bench, NeedsTaskFile) {
  TempDir dir;
  BenchRunOptions o;
  o.stub_gateway = true;
  EXPECT_THROW(run_bench(parse(dir, make_config(dir, 1)), o), ConfigError);
}

}  // namespace
}  // namespace vizforge
