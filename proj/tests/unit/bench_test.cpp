// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <random>
#include <thread>

#include "test_support.hpp"
#include "vizforge/bench/bench.hpp"
#include "vizforge/bench/review.hpp"
#include "vizforge/common/errors.hpp"

namespace vizforge {
namespace {

using testing::TempDir;

BenchTask task(const std::string& id, Engine e = Engine::kManim) {
  return BenchTask{id, e, "Animate " + id + ".", "from manim import *\n", std::string(profile_for(e))};
}

struct Harness {
  std::shared_ptr<TemplateStore> templates = std::make_shared<TemplateStore>(VIZFORGE_TEMPLATE_DIR);
  Gateway gateway{templates, [](const std::string& h) { return Attachment{h, MediaKind::kImage, "x"}; }};
  std::map<std::string, EnvProfile> profiles = default_profiles();
  NoopExecutor noop;
  std::mutex mu;
  std::vector<ProviderCall> calls;

  void script(JudgeRole role, std::function<std::string(const ProviderCall&)> reply) {
    gateway.set_role(role, RoleConfig{std::make_shared<ScriptedProvider>([this, reply](const ProviderCall& c) {
                                        std::lock_guard lock(mu);
                                        calls.push_back(c);
                                        return reply(c);
                                      }),
                                      0, std::chrono::milliseconds(0), nullptr});
  }
};

// Generation replies keyed on the task's instruction text.
std::string generation_reply(const ProviderCall& c) {
  if (c.prompt.find("prose") != std::string::npos) return "I would animate a circle, then fade it out.";
  if (c.prompt.find("broken") != std::string::npos) return "```python\nx = 1\n# vizforge-stub: fail\n```";
  if (c.prompt.find("two-blocks") != std::string::npos) {
    return "Draft:\n```python\n# vizforge-stub: fail\n```\nFinal:\n```python\nclass Final(Scene): pass\n```\n";
  }
  return "```python\nclass Ok(Scene): pass\n```";
}

TEST(BenchTask, EngineDeterminesProfile) {
  auto t = bench_task_from_json({{"task_id", "w1"}, {"engine", "wolfram"}, {"instruction", "i"}, {"reference_code", "r"}});
  EXPECT_EQ(t.env_profile_id, "wolfram-eval");
  EXPECT_EQ(bench_task_from_json(to_json(t)), t);
  EXPECT_THROW(bench_task_from_json({{"task_id", "m"}, {"engine", "manim"}, {"instruction", "i"}, {"reference_code", "r"},
                                     {"env_profile_id", "wolfram-eval"}}),
               MalformedItemError);
  EXPECT_THROW(bench_task_from_json({{"task_id", "m"}, {"engine", "blender"}, {"instruction", "i"}, {"reference_code", "r"}}),
               MalformedItemError);
}

TEST(BenchTask, LoadRejectsDuplicatesWithLine) {
  TempDir d;
  testing::write_text(d / "tasks.jsonl", to_json(task("a")).dump() + "\n\n" + to_json(task("a")).dump() + "\n");
  try {
    load_bench_tasks(d / "tasks.jsonl");
    FAIL();
  } catch (const MalformedItemError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(RunSuite, ExecutabilityAndNoCode) {
  Harness h;
  h.script(JudgeRole::kSynthesizer, generation_reply);
  const auto recs = run_suite({task("good"), task("prose"), task("broken"), task("two-blocks")}, h.gateway, h.noop,
                              h.profiles, {});
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[0].s_exec, 1);
  EXPECT_FALSE(recs[0].reason);
  EXPECT_EQ(recs[1].s_exec, 0);
  EXPECT_EQ(recs[1].reason, "no_code");
  EXPECT_FALSE(recs[1].generated_code);
  EXPECT_EQ(recs[2].s_exec, 0);
  EXPECT_EQ(recs[2].reason, "exit code 1");
  EXPECT_EQ(recs[3].s_exec, 1);
  EXPECT_EQ(recs[3].generated_code, "class Final(Scene): pass\n");
}

TEST(RunSuite, StubModelProducesRunnableCode) {
  Harness h;
  h.gateway.set_role(JudgeRole::kSynthesizer, RoleConfig{std::make_shared<StubProvider>(), 0, {}, nullptr});
  const auto recs = run_suite({task("m1"), task("w1", Engine::kWolfram)}, h.gateway, h.noop, h.profiles, {});
  EXPECT_EQ(recs[0].s_exec, 1);
  EXPECT_EQ(recs[1].s_exec, 1);
  EXPECT_NE(recs[1].generated_code->find("Print["), std::string::npos);
}

TEST(RunSuite, TaskErrorsDoNotAbort) {
  Harness h;
  h.script(JudgeRole::kSynthesizer, generation_reply);
  auto odd = task("odd");
  odd.env_profile_id = "missing";
  auto none = task("none");
  none.env_profile_id = "none";
  const auto recs = run_suite({odd, none, task("fine")}, h.gateway, h.noop, h.profiles, {});
  EXPECT_EQ(recs[0].reason->rfind("error: unknown env profile", 0), 0u);
  EXPECT_EQ(recs[1].reason->rfind("error:", 0), 0u);
  EXPECT_EQ(recs[2].s_exec, 1);
  EXPECT_THROW(run_suite({}, h.gateway, h.noop, h.profiles, {}), PreconditionError);
}

TEST(RunSuite, ResumesFromJournal) {
  TempDir d;
  Harness h;
  h.script(JudgeRole::kSynthesizer, generation_reply);
  SuiteOptions opt;
  opt.journal = d / "records.jsonl";
  std::vector<BenchTask> tasks;
  for (int i = 0; i < 6; ++i) tasks.push_back(task("t" + std::to_string(i)));

  const auto first = run_suite({tasks[0], tasks[1]}, h.gateway, h.noop, h.profiles, opt);
  EXPECT_EQ(h.calls.size(), 2u);
  // A write cut short by a crash.
  std::ofstream(opt.journal, std::ios::app) << R"({"task_id":"t2","eng)";
  const auto all = run_suite(tasks, h.gateway, h.noop, h.profiles, opt);
  EXPECT_EQ(h.calls.size(), 6u);
  EXPECT_EQ(all[0], first[0]);
  ASSERT_EQ(all.size(), 6u);
  const auto again = run_suite(tasks, h.gateway, h.noop, h.profiles, opt);
  EXPECT_EQ(h.calls.size(), 6u);
  EXPECT_EQ(again, all);
  std::size_t torn = 0;
  EXPECT_EQ(read_jsonl_journal(opt.journal, &torn).size(), 6u);
  EXPECT_EQ(torn, 1u);
}

TEST(RunSuite, ParallelMatchesSerial) {
  Harness h;
  h.gateway.set_role(JudgeRole::kSynthesizer, RoleConfig{std::make_shared<StubProvider>(StubOptions{30, "# vizforge-stub: fail", 20}), 0, {}, nullptr});
  std::vector<BenchTask> tasks;
  for (int i = 0; i < 40; ++i) tasks.push_back(task("p" + std::to_string(i), i % 2 ? Engine::kWolfram : Engine::kManim));
  SuiteOptions par;
  par.max_parallel = 4;
  EXPECT_EQ(run_suite(tasks, h.gateway, h.noop, h.profiles, par), run_suite(tasks, h.gateway, h.noop, h.profiles, {}));
}

TEST(RunSuite, FullLoadComposition) {
  TempDir d;
  std::string lines;
  for (int i = 0; i < 52; ++i) lines += to_json(task("manim-" + std::to_string(i))).dump() + "\n";
  for (int i = 0; i < 50; ++i) lines += to_json(task("wolfram-" + std::to_string(i), Engine::kWolfram)).dump() + "\n";
  testing::write_text(d / "tasks.jsonl", lines);
  Harness h;
  h.gateway.set_role(JudgeRole::kSynthesizer, RoleConfig{std::make_shared<StubProvider>(), 0, {}, nullptr});
  const auto recs = run_suite(load_bench_tasks(d / "tasks.jsonl"), h.gateway, h.noop, h.profiles, {});
  ASSERT_EQ(recs.size(), 102u);
  EXPECT_EQ(std::count_if(recs.begin(), recs.end(), [](const auto& r) { return r.engine == Engine::kManim; }), 52);
}

const char* kJudgeReply =
    R"({"code_similarity":{"score":3,"reasoning":"Same scene structure."},"instruction_alignment":{"score":4,"reasoning":"Matches."}})";

BenchRecord executed(const std::string& id, Engine e = Engine::kManim) {
  BenchRecord r;
  r.task_id = id;
  r.engine = e;
  r.generated_code = "class A(Scene): pass\n";
  r.s_exec = 1;
  r.validation = ValidationResult{};
  r.validation->passed = true;
  return r;
}

TEST(ScoreRecord, Formula) {
  EXPECT_EQ(make_score("a", Engine::kManim, 0, {}, {}, {}).overall, Rational(0));
  const auto full = make_score("a", Engine::kManim, 1, 5, 5, Rational(5));
  EXPECT_EQ(full.overall, Rational(15));
  EXPECT_TRUE(full.faith_included);
  const auto nofaith = make_score("a", Engine::kManim, 1, 3, 4, {});
  EXPECT_EQ(nofaith.overall, Rational(7));
  EXPECT_FALSE(nofaith.faith_included);
  EXPECT_THROW(make_score("a", Engine::kManim, 1, 0, 4, {}), PreconditionError);
  EXPECT_THROW(make_score("a", Engine::kManim, 1, 3, 4, Rational(6)), PreconditionError);
  EXPECT_THROW(make_score("a", Engine::kManim, 0, 3, 4, {}), PreconditionError);
  EXPECT_THROW(make_score("a", Engine::kManim, 2, 3, 4, {}), PreconditionError);
}

TEST(ScoreRecord, NoJudgeCallWhenNotExecuted) {
  Harness h;
  h.script(JudgeRole::kTextJudge, [](const ProviderCall&) { return kJudgeReply; });
  BenchRecord r;
  r.task_id = "x";
  r.reason = "no_code";
  const auto s = score_record(r, task("x"), h.gateway, Rational(5));
  EXPECT_EQ(s.overall, Rational(0));
  EXPECT_FALSE(s.s_sim);
  EXPECT_FALSE(s.s_faith);
  EXPECT_TRUE(h.calls.empty());
}

TEST(ScoreRecord, StrictJudge) {
  Harness h;
  h.script(JudgeRole::kTextJudge, [](const ProviderCall&) { return kJudgeReply; });
  const auto s = score_record(executed("x"), task("x"), h.gateway);
  EXPECT_EQ(s.s_sim, 3);
  EXPECT_EQ(s.s_align, 4);
  EXPECT_EQ(s.overall, Rational(7));
  ASSERT_EQ(h.calls.size(), 1u);
  EXPECT_EQ(h.calls[0].template_id, "bench-judge");
  EXPECT_NE(h.calls[0].prompt.find("class A(Scene)"), std::string::npos);
  EXPECT_EQ(score_record(executed("x"), task("x"), h.gateway, Rational(4)).overall, Rational(11));

  // Fenced JSON breaks the single-line contract, even after the re-ask.
  h.calls.clear();
  h.script(JudgeRole::kTextJudge, [](const ProviderCall&) { return std::string("```json\n") + kJudgeReply + "\n```"; });
  const auto u = score_record(executed("x"), task("x"), h.gateway);
  EXPECT_TRUE(u.unscored);
  EXPECT_TRUE(u.error);
  EXPECT_EQ(h.calls.size(), 2u);

  h.script(JudgeRole::kTextJudge, [](const ProviderCall&) {
    return R"({"code_similarity":{"score":3,"reasoning":"a"},"instruction_alignment":{"score":4,"reasoning":"b"},"total":7})";
  });
  EXPECT_TRUE(score_record(executed("x"), task("x"), h.gateway).unscored);
}

TEST(ScoreRecord, ZeroGatingAndMonotonicity) {
  std::mt19937 rng(3);
  for (int i = 0; i < 2000; ++i) {
    const int exec = static_cast<int>(rng() % 2);
    const int sim = 1 + static_cast<int>(rng() % 5);
    const int align = 1 + static_cast<int>(rng() % 5);
    std::optional<Rational> faith;
    if (rng() % 2) faith = Rational(1 + static_cast<int>(rng() % 5));
    const auto s = exec ? make_score("t", Engine::kManim, 1, sim, align, faith)
                        : make_score("t", Engine::kManim, 0, {}, {}, faith);
    EXPECT_EQ(s.overall == Rational(0), exec == 0);
    if (exec && sim < 5) EXPECT_GT(make_score("t", Engine::kManim, 1, sim + 1, align, faith).overall, s.overall);
    if (exec && align < 5) EXPECT_GT(make_score("t", Engine::kManim, 1, sim, align + 1, faith).overall, s.overall);
    if (exec && faith && *faith < Rational(5)) {
      EXPECT_GT(make_score("t", Engine::kManim, 1, sim, align, *faith + Rational(1)).overall, s.overall);
    }
  }
}

TEST(Aggregate, Examples) {
  const auto one = aggregate_report({make_score("a", Engine::kManim, 1, 4, 5, {})});
  EXPECT_DOUBLE_EQ(one.engines.at("manim").mean, 9.0);
  const auto two = aggregate_report({make_score("a", Engine::kManim, 0, {}, {}, {}),
                                     make_score("b", Engine::kManim, 1, 5, 5, {})});
  EXPECT_DOUBLE_EQ(two.engines.at("manim").mean, 5.0);
  EXPECT_DOUBLE_EQ(two.engines.at("manim").exec_rate, 0.5);
  BenchScore u;
  u.task_id = "u";
  u.s_exec = 1;
  u.unscored = true;
  EXPECT_THROW(aggregate_report({u, u}), EmptyReportError);
  EXPECT_THROW(aggregate_report({}), EmptyReportError);
}

TEST(Aggregate, FaithPopulationsStaySeparate) {
  const auto r = aggregate_report({
      make_score("a", Engine::kWolfram, 1, 4, 4, Rational(4)),  // 12, without 8
      make_score("b", Engine::kWolfram, 1, 2, 2, {}),           // without 4
      make_score("c", Engine::kWolfram, 0, {}, {}, {}),         // 0 in both
  });
  const auto& w = r.engines.at("wolfram");
  EXPECT_DOUBLE_EQ(w.mean_without_faith, 4.0);
  ASSERT_TRUE(w.mean_with_faith);
  EXPECT_DOUBLE_EQ(*w.mean_with_faith, 6.0);
  EXPECT_EQ(w.faith_population, 2);
  EXPECT_DOUBLE_EQ(w.faith_coverage, 0.5);
  EXPECT_FALSE(w.mean_includes_faith);
  EXPECT_DOUBLE_EQ(w.mean, 4.0);

  // Full coverage switches the headline mean to the faith-bearing one.
  const auto full = aggregate_report({with_faith(make_score("b", Engine::kWolfram, 1, 2, 2, {}), Rational(5)),
                                      make_score("c", Engine::kWolfram, 0, {}, {}, {})});
  EXPECT_TRUE(full.engines.at("wolfram").mean_includes_faith);
  EXPECT_DOUBLE_EQ(full.engines.at("wolfram").mean, 4.5);
}

TEST(Aggregate, UnscoredCountedNotAveraged) {
  BenchScore u;
  u.task_id = "u";
  u.engine = Engine::kManim;
  u.s_exec = 1;
  u.unscored = true;
  const auto r = aggregate_report({u, make_score("a", Engine::kManim, 1, 3, 3, {})});
  EXPECT_EQ(r.engines.at("manim").unscored, 1);
  EXPECT_DOUBLE_EQ(r.engines.at("manim").mean, 6.0);
  EXPECT_DOUBLE_EQ(r.engines.at("manim").exec_rate, 1.0);
}

TEST(Aggregate, WritesJsonAndText) {
  TempDir d;
  write_report(d / "out", aggregate_report({make_score("a", Engine::kManim, 1, 4, 5, {})}));
  const auto j = Json::parse(read_file(d / "out/report.json"));
  EXPECT_EQ(j["engines"]["manim"]["mean"], 9.0);
  EXPECT_NE(read_file(d / "out/report.txt").find("manim"), std::string::npos);
}

TEST(BenchJson, RoundTrips) {
  auto r = executed("x");
  r.artifacts = {"abc"};
  EXPECT_EQ(bench_record_from_json(to_json(r)), r);
  const auto s = make_score("a", Engine::kWolfram, 1, 4, 5, Rational(7, 2));
  EXPECT_EQ(bench_score_from_json(to_json(s)), s);
}

// ---- review ----

ReviewItem faith_item(const std::string& task_id, std::vector<std::string> media = {}) {
  return ReviewItem{review_item_id(ReviewKind::kBenchFaith, task_id), ReviewKind::kBenchFaith, task_id,
                    std::move(media), "Animate " + task_id};
}

TEST(Review, QueueSkipsItemsScoredByAnnotator) {
  TempDir d;
  ReviewStore store(d / "review", {{"ann", "bob"}, 1});
  EXPECT_TRUE(store.queue("ann").empty());
  for (auto id : {"a", "b", "c"}) EXPECT_TRUE(store.add_item(faith_item(id)));
  EXPECT_FALSE(store.add_item(faith_item("a")));
  store.submit(faith_item("b").item_id, "ann", 4);
  const auto q = store.queue("ann");
  ASSERT_EQ(q.size(), 2u);
  EXPECT_EQ(q[0].subject_id, "a");
  EXPECT_EQ(q[1].subject_id, "c");
  EXPECT_TRUE(store.queue("ann", ReviewKind::kRewardSpotcheck).empty());
  try {
    store.queue("mallory");
    FAIL();
  } catch (const ReviewError& e) {
    EXPECT_EQ(e.kind(), ReviewError::Kind::kAuth);
  }
}

TEST(Review, SubmitValidationAndFirstWins) {
  TempDir d;
  ReviewStore store(d / "review", {{"ann", "bob"}, 1});
  store.add_item(faith_item("a"));
  const auto id = faith_item("a").item_id;
  for (const Json bad : {Json(0), Json(6), Json(4.5), Json("4")}) {
    try {
      store.submit(id, "ann", bad);
      FAIL() << bad;
    } catch (const ReviewError& e) {
      EXPECT_EQ(e.kind(), ReviewError::Kind::kValidation);
    }
  }
  EXPECT_FALSE(store.scored(id));
  const auto first = store.submit(id, "ann", 4, "clear");
  EXPECT_FALSE(first.replay);
  const auto again = store.submit(id, "ann", 3);
  EXPECT_TRUE(again.replay);
  EXPECT_EQ(again.stored.score, 4);
  EXPECT_EQ(store.conflicts_logged(), 1);
  store.submit(id, "ann", 4, "clear");
  EXPECT_EQ(store.conflicts_logged(), 1);
  try {
    store.submit(id, "bob", 2);
    FAIL();
  } catch (const ReviewError& e) {
    EXPECT_EQ(e.kind(), ReviewError::Kind::kConflict);
  }
  try {
    store.submit("nope", "ann", 2);
    FAIL();
  } catch (const ReviewError& e) {
    EXPECT_EQ(e.kind(), ReviewError::Kind::kNotFound);
  }
  EXPECT_EQ(store.item_score(ReviewKind::kBenchFaith, "a"), Rational(4));

  ReviewStore reopened(d / "review", {{"ann", "bob"}, 1});
  EXPECT_EQ(reopened.item_score(ReviewKind::kBenchFaith, "a"), Rational(4));
  EXPECT_EQ(reopened.submissions(id)[0].comment, "clear");
  EXPECT_EQ(reopened.conflicts_logged(), 1);
}

TEST(Review, QuorumAveragesExactly) {
  TempDir d;
  ReviewStore store(d / "review", {{"ann", "bob", "cy"}, 2});
  store.add_item(faith_item("a"));
  const auto id = faith_item("a").item_id;
  store.submit(id, "ann", 4);
  EXPECT_FALSE(store.item_score(ReviewKind::kBenchFaith, "a"));
  EXPECT_EQ(store.queue("bob").size(), 1u);
  EXPECT_TRUE(store.queue("ann").empty());
  store.submit(id, "bob", 3);
  EXPECT_EQ(store.item_score(ReviewKind::kBenchFaith, "a"), Rational(7, 2));
  EXPECT_TRUE(store.queue("cy").empty());
  EXPECT_THROW(ReviewStore(d / "r2", {{"ann"}, 0}), ConfigError);
}

TEST(Review, ConcurrentSubmissionsHaveOneWinner) {
  TempDir d;
  std::set<std::string> annotators;
  for (int i = 0; i < 8; ++i) annotators.insert("a" + std::to_string(i));
  ReviewStore store(d / "review", {annotators, 1});
  store.add_item(faith_item("x"));
  const auto id = faith_item("x").item_id;
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> ts;
  for (const auto& a : annotators) {
    ts.emplace_back([&, a] {
      try {
        store.submit(id, a, 3);
        ++ok;
      } catch (const ReviewError&) {
        ++conflict;
      }
    });
  }
  for (auto& t : ts) t.join();
  EXPECT_EQ(ok, 1);
  EXPECT_EQ(conflict, 7);
  EXPECT_EQ(store.submissions(id).size(), 1u);
}

TEST(Review, FaithFeedsReport) {
  TempDir d;
  ReviewStore store(d / "review", {{"ann"}, 1});
  store.add_item(faith_item("a"));
  const auto base = make_score("a", Engine::kManim, 1, 3, 3, {});
  auto report = [&] {
    return aggregate_report({with_faith(base, store.item_score(ReviewKind::kBenchFaith, "a"))});
  };
  EXPECT_DOUBLE_EQ(report().engines.at("manim").faith_coverage, 0.0);
  store.submit(faith_item("a").item_id, "ann", 4);
  const auto after = report().engines.at("manim");
  EXPECT_DOUBLE_EQ(after.faith_coverage, 1.0);
  EXPECT_DOUBLE_EQ(*after.mean_with_faith, 10.0);
  EXPECT_DOUBLE_EQ(after.mean_without_faith, 6.0);
}

struct Api {
  TempDir d;
  CorpusStore corpus{d / "corpus"};
  ReviewStore store{d / "review", {{"ann"}, 1}};
  std::string png = corpus.put_artifact(std::string("\x89PNG\r\n\x1a\nbody", 12), MediaKind::kImage, "test");
  Api() { store.add_item(faith_item("a", {png})); }
  HttpReply call(const std::string& method, const std::string& path, std::map<std::string, std::string> query = {},
                 std::string body = {}, std::map<std::string, std::string> headers = {}) {
    return handle_review_request(store, &corpus, method, path, query, headers, body);
  }
};

TEST(ReviewApi, StatusCodes) {
  Api api;
  const auto id = faith_item("a").item_id;
  const auto q = api.call("GET", "/api/queue", {{"annotator", "ann"}, {"kind", "bench_faith"}});
  EXPECT_EQ(q.status, 200);
  EXPECT_EQ(Json::parse(q.body).size(), 1u);
  EXPECT_EQ(api.call("GET", "/api/queue", {{"annotator", "eve"}}).status, 401);
  EXPECT_EQ(api.call("GET", "/api/queue", {{"annotator", "ann"}, {"kind", "x"}}).status, 400);

  const auto media = api.call("GET", "/api/item/" + id + "/media");
  EXPECT_EQ(media.status, 200);
  EXPECT_EQ(media.content_type, "image/png");
  EXPECT_EQ(api.call("GET", "/api/item/" + id + "/media", {{"index", "1"}}).status, 404);
  EXPECT_EQ(api.call("GET", "/api/item/zzz/media").status, 404);

  const auto score = "/api/item/" + id + "/score";
  EXPECT_EQ(api.call("POST", score, {{"annotator", "eve"}}, R"({"score":4})").status, 401);
  EXPECT_EQ(api.call("POST", score, {{"annotator", "ann"}}, R"({"score":0})").status, 400);
  EXPECT_EQ(api.call("POST", score, {{"annotator", "ann"}}, R"({"score":6})").status, 400);
  EXPECT_EQ(api.call("POST", score, {{"annotator", "ann"}}, "not json").status, 400);
  EXPECT_EQ(api.call("POST", score, {{"annotator", "ann"}}, R"({"score":4,"extra":1})").status, 400);
  EXPECT_FALSE(api.store.scored(id));
  const auto ok = api.call("POST", score, {}, R"({"score":4,"comment":"good"})", {{"X-Annotator", "ann"}});
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(Json::parse(ok.body)["status"], "scored");
  const auto replay = api.call("POST", score, {{"annotator", "ann"}}, R"({"score":3})");
  EXPECT_EQ(replay.status, 200);
  EXPECT_EQ(Json::parse(replay.body)["score"], 4);
  EXPECT_EQ(api.call("POST", "/api/item/zzz/score", {{"annotator", "ann"}}, R"({"score":3})").status, 404);
  EXPECT_EQ(api.call("DELETE", score).status, 405);
}

TEST(ReviewApi, OverHttp) {
  Api api;
  ReviewServer server(api.store, &api.corpus);
  const int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.serve(); });
  httplib::Client cli("127.0.0.1", port);
  for (int i = 0; i < 100 && !cli.Get("/api/queue?annotator=ann"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  const auto id = faith_item("a").item_id;
  const auto q = cli.Get("/api/queue?annotator=ann");
  ASSERT_TRUE(q);
  EXPECT_EQ(q->status, 200);
  const auto m = cli.Get("/api/item/" + id + "/media");
  ASSERT_TRUE(m);
  EXPECT_EQ(m->get_header_value("Content-Type"), "image/png");
  const auto bad = cli.Post("/api/item/" + id + "/score?annotator=ann", R"({"score":6})", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  const auto ok = cli.Post("/api/item/" + id + "/score?annotator=ann", R"({"score":5})", "application/json");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  const auto anon = cli.Post("/api/item/" + id + "/score", R"({"score":5})", "application/json");
  ASSERT_TRUE(anon);
  EXPECT_EQ(anon->status, 401);
  server.stop();
  t.join();
}

}  // namespace
}  // namespace vizforge
