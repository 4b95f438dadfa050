// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <httplib.h>
#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "test_support.hpp"
#include "vizforge/common/errors.hpp"
#include "vizforge/common/hash.hpp"
#include "vizforge/gateway/gateway.hpp"

namespace vizforge {
namespace {

using testing::TempDir;

JudgeSchema bench_schema(bool strict) {
  JudgeSchema s;
  s.name = "bench";
  s.strict = strict;
  s.scores = {{{"code_similarity", "score"}, 1, 5}, {{"instruction_alignment", "score"}, 1, 5}};
  s.texts = {{{"code_similarity", "reasoning"}, true, true}, {{"instruction_alignment", "reasoning"}, true, true}};
  return s;
}

const char* kBenchReply =
    R"({"code_similarity":{"score":4,"reasoning":"close"},"instruction_alignment":{"score":5,"reasoning":"ok"}})";

struct Fixture {
  TempDir dir;
  std::shared_ptr<TemplateStore> templates;
  Gateway gateway;

  Fixture()
      : templates(std::make_shared<TemplateStore>(dir.path() / "tpl")),
        gateway(templates, [](const std::string& h) { return Attachment{h, MediaKind::kImage, "img:" + h}; }) {
    testing::write_text(dir / "tpl/evolve.txt", "I={instruction} C={code} K={concept} F={feedback}");
    testing::write_text(dir / "tpl/judge.txt", "judge {code}");
    gateway.set_call_log(dir / "calls.jsonl", "run-test");
  }

  void use(std::shared_ptr<Provider> p, int retries = 2) {
    for (auto r : {JudgeRole::kSynthesizer, JudgeRole::kTextJudge, JudgeRole::kVisionJudge}) {
      gateway.set_role(r, RoleConfig{p, retries, std::chrono::milliseconds(0), nullptr});
    }
  }

  std::vector<Json> log() const { return read_jsonl(dir / "calls.jsonl"); }
};

GatewayRequest evolve_request(const std::string& keyword = "heatmap") {
  GatewayRequest r;
  r.template_id = "evolve";
  r.variables = {{"instruction", "plot"}, {"code", "x"}, {"concept", keyword}, {"feedback", ""}};
  r.expect.kind = OutputShape::Kind::kSections;
  r.expect.sections = {"[Problem Description]", "[Code Solution]"};
  r.expect.code_section = "[Code Solution]";
  return r;
}

TEST(Template, PlaceholdersAndRendering) {
  PromptTemplate t("t", "a {x} b {y_1} {{literal}} {x}");
  EXPECT_EQ(t.placeholders(), (std::set<std::string>{"x", "y_1"}));
  EXPECT_EQ(t.render({{"x", "1"}, {"y_1", "2"}, {"extra", "3"}}), "a 1 b 2 {literal} 1");
}

TEST(Template, MissingPlaceholderIsTemplateError) {
  PromptTemplate t("evolve", "K={concept} I={instruction}");
  try {
    t.render({{"instruction", "i"}});
    FAIL();
  } catch (const TemplateError& e) {
    EXPECT_NE(std::string(e.what()).find("{concept}"), std::string::npos);
  }
}

TEST(Template, MalformedTemplates) {
  EXPECT_THROW(PromptTemplate("t", "a {unclosed"), TemplateError);
  EXPECT_THROW(PromptTemplate("t", "a } b"), TemplateError);
  EXPECT_THROW(PromptTemplate("t", "a {not valid}"), TemplateError);
  EXPECT_THROW(PromptTemplate("t", "a {}"), TemplateError);
}

TEST(Template, ShippedTemplatesParse) {
  TemplateStore store(VIZFORGE_TEMPLATE_DIR);
  for (const auto* id : {"synth-evolve", "synth-recontext", "synth-reverse-instruction", "synth-reverse-code",
                         "synth-translate-instruction", "synth-translate-code", "reward-vision", "reward-text",
                         "reward-edit", "bench-generate", "bench-judge"}) {
    EXPECT_NO_THROW(store.get(id)) << id;
  }
  EXPECT_EQ(store.get("synth-evolve").placeholders(),
            (std::set<std::string>{"instruction", "code", "concept", "feedback"}));
  EXPECT_THROW(store.get("no-such-template"), TemplateError);
}

TEST(Gateway, StubIsDeterministic) {
  Fixture f;
  f.use(std::make_shared<StubProvider>());
  const auto a = f.gateway.complete(evolve_request());
  const auto b = f.gateway.complete(evolve_request());
  const auto c = f.gateway.complete(evolve_request("treemap"));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  const auto markers = std::vector<std::string>{"[Problem Description]", "[Code Solution]"};
  EXPECT_TRUE(extract_section(a, "[Problem Description]", markers).has_value());
  EXPECT_TRUE(extract_section(a, "[Code Solution]", markers).has_value());
}

TEST(Gateway, StubIsIndependentOfOtherInstances) {
  Fixture f1, f2;
  f1.use(std::make_shared<StubProvider>());
  f2.use(std::make_shared<StubProvider>());
  EXPECT_EQ(f1.gateway.complete(evolve_request()), f2.gateway.complete(evolve_request()));
}

TEST(Gateway, MissingPlaceholderValue) {
  Fixture f;
  f.use(std::make_shared<StubProvider>());
  auto r = evolve_request();
  r.variables.erase("concept");
  EXPECT_THROW(f.gateway.complete(r), TemplateError);
}

TEST(Gateway, RetriesThenUnavailable) {
  Fixture f;
  int calls = 0;
  f.use(std::make_shared<ScriptedProvider>([&](const ProviderCall&) -> std::string {
          ++calls;
          throw TransportError("HTTP 503");
        }),
        2);
  EXPECT_THROW(f.gateway.complete(evolve_request()), GatewayUnavailableError);
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(f.log().size(), 3u);
}

TEST(Gateway, RecoversWithinRetryCap) {
  Fixture f;
  int calls = 0;
  f.use(std::make_shared<ScriptedProvider>([&](const ProviderCall&) -> std::string {
          if (++calls < 3) throw TransportError("HTTP 502");
          return "fine";
        }),
        2);
  EXPECT_EQ(f.gateway.complete(evolve_request()), "fine");
}

TEST(Gateway, VisionJudgeNeedsAttachments) {
  Fixture f;
  f.use(std::make_shared<StubProvider>());
  GatewayRequest r;
  r.role = JudgeRole::kVisionJudge;
  r.template_id = "judge";
  r.variables = {{"code", "c"}};
  EXPECT_THROW(f.gateway.complete(r), PreconditionError);
  r.attachments = {std::string(64, 'a')};
  EXPECT_NO_THROW(f.gateway.complete(r));
}

TEST(Gateway, EveryCallIsLoggedWithHashes) {
  Fixture f;
  std::vector<std::string> replies;
  f.use(std::make_shared<ScriptedProvider>([&](const ProviderCall& c) {
    replies.push_back("reply to " + c.prompt);
    return replies.back();
  }));
  for (int i = 0; i < 5; ++i) {
    auto r = evolve_request("k" + std::to_string(i));
    r.task_id = "task-" + std::to_string(i);
    f.gateway.complete(r);
  }
  const auto log = f.log();
  ASSERT_EQ(log.size(), 5u);
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(log[i]["run_id"], "run-test");
    EXPECT_EQ(log[i]["task_id"], "task-" + std::to_string(i));
    EXPECT_TRUE(is_sha256_hex(log[i]["request_hash"].get<std::string>()));
    EXPECT_EQ(log[i]["response_hash"], sha256_hex(replies[i]));
  }
  EXPECT_EQ(f.gateway.calls_logged(), 5);
}

TEST(JudgeOutput, ParsesBenchExample) {
  const auto r = parse_judge_output(kBenchReply, bench_schema(true));
  EXPECT_EQ(r.scores.at("code_similarity.score"), 4);
  EXPECT_EQ(r.scores.at("instruction_alignment.score"), 5);
}

TEST(JudgeOutput, FencesOnlyToleratedWhenLenient) {
  const std::string fenced = std::string("```json\n") + kBenchReply + "\n```";
  EXPECT_THROW(parse_judge_output(fenced, bench_schema(true)), JudgeFormatError);
  EXPECT_EQ(parse_judge_output(fenced, bench_schema(false)).scores.at("code_similarity.score"), 4);
}

TEST(JudgeOutput, RangeAndTypeViolations) {
  for (const char* bad :
       {R"({"code_similarity":{"score":6,"reasoning":"a"},"instruction_alignment":{"score":5,"reasoning":"b"}})",
        R"({"code_similarity":{"score":0,"reasoning":"a"},"instruction_alignment":{"score":5,"reasoning":"b"}})",
        R"({"code_similarity":{"score":"4","reasoning":"a"},"instruction_alignment":{"score":5,"reasoning":"b"}})",
        R"({"code_similarity":{"score":4.5,"reasoning":"a"},"instruction_alignment":{"score":5,"reasoning":"b"}})",
        R"({"code_similarity":{"score":4,"reasoning":"a"}})",
        R"({"code_similarity":{"score":4,"reasoning":"a"},"instruction_alignment":{"score":5,"reasoning":"b"},"x":1})",
        "not json at all"}) {
    EXPECT_THROW(parse_judge_output(bad, bench_schema(true)), JudgeFormatError) << bad;
  }
}

TEST(JudgeOutput, LenientAcceptsIntegralStrings) {
  JudgeSchema s;
  s.scores = {{{"Task Completion"}, 1, 5}};
  EXPECT_EQ(parse_judge_output(R"(Sure: {"Task Completion": "3"})", s).scores.at("Task Completion"), 3);
  EXPECT_EQ(parse_judge_output(R"({"Task Completion": "4.0"})", s).scores.at("Task Completion"), 4);
  EXPECT_THROW(parse_judge_output(R"({"Task Completion": "3.5"})", s), JudgeFormatError);
}

TEST(Gateway, JudgeReaskRecovers) {
  Fixture f;
  int calls = 0;
  std::string second_prompt;
  f.use(std::make_shared<ScriptedProvider>([&](const ProviderCall& c) -> std::string {
    if (++calls == 1) {
      return R"({"code_similarity":{"score":6,"reasoning":"a"},"instruction_alignment":{"score":5,"reasoning":"b"}})";
    }
    second_prompt = c.prompt;
    return kBenchReply;
  }));
  GatewayRequest r;
  r.role = JudgeRole::kTextJudge;
  r.template_id = "judge";
  r.variables = {{"code", "c"}};
  const auto res = f.gateway.judge_structured(r, bench_schema(true));
  EXPECT_EQ(res.attempts, 2);
  EXPECT_NE(second_prompt.find("rejected"), std::string::npos);
}

TEST(Gateway, JudgePersistentViolation) {
  Fixture f;
  int calls = 0;
  f.use(std::make_shared<ScriptedProvider>([&](const ProviderCall&) {
    ++calls;
    return std::string("```json\n") + kBenchReply + "\n```";
  }));
  GatewayRequest r;
  r.role = JudgeRole::kTextJudge;
  r.template_id = "judge";
  r.variables = {{"code", "c"}};
  EXPECT_THROW(f.gateway.judge_structured(r, bench_schema(true)), JudgeFormatError);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(f.gateway.judge_structured(r, bench_schema(false)).attempts, 1);
}

TEST(Gateway, StubJudgeRepliesSatisfyStrictSchema) {
  Fixture f;
  f.use(std::make_shared<StubProvider>());
  for (int i = 0; i < 50; ++i) {
    GatewayRequest r;
    r.role = JudgeRole::kTextJudge;
    r.template_id = "judge";
    r.variables = {{"code", std::to_string(i)}};
    const auto res = f.gateway.judge_structured(r, bench_schema(true));
    EXPECT_EQ(res.attempts, 1);
  }
}

TEST(FrameSampling, UniformMidpoints) {
  EXPECT_EQ(sample_frame_indices(600), (std::vector<int>{50, 150, 250, 350, 450, 550}));
  EXPECT_EQ(sample_frame_indices(3), (std::vector<int>{0, 1, 2}));
  EXPECT_TRUE(sample_frame_indices(0).empty());
  for (int total = 7; total < 400; total += 13) {
    const auto idx = sample_frame_indices(total);
    ASSERT_EQ(idx.size(), 6u);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      // Frame [idx, idx+1) overlaps its own segment [i*total/6, (i+1)*total/6).
      EXPECT_GT((idx[i] + 1) * 6, static_cast<int>(i) * total);
      EXPECT_LT(idx[i] * 6, static_cast<int>(i + 1) * total);
      if (i > 0) EXPECT_GT(idx[i], idx[i - 1]);
    }
  }
}

TEST(Sections, ExtractAndFences) {
  const std::vector<std::string> m = {"[Problem Description]", "[Code Solution]"};
  const std::string text = "noise\n[Problem Description]\n  Draw a circle.\n[Code Solution]\n```python\nc()\n```\n";
  EXPECT_EQ(extract_section(text, m[0], m), "Draw a circle.");
  EXPECT_EQ(extract_section(text, m[1], m), "c()");
  EXPECT_FALSE(extract_section("[Problem Description]\n\n[Code Solution]\nx", m[0], m));
  EXPECT_EQ(last_fenced_block("a\n```py\none\n```\nb\n```\ntwo\n```\n"), "two\n");
  EXPECT_FALSE(last_fenced_block("no code here"));
  EXPECT_FALSE(last_fenced_block("```\nunclosed"));
}

TEST(RateLimiter, SpacesCalls) {
  RateLimiter limiter(200.0, 1.0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 21; ++i) limiter.acquire();
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_GE(elapsed, std::chrono::milliseconds(90));
}

class LocalServer {
 public:
  explicit LocalServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(HttpProvider, ServerErrorsExhaustRetries) {
  std::atomic<int> hits{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });
  Fixture f;
  f.use(std::shared_ptr<Provider>(make_http_provider({server.url(), "m", "VIZFORGE_TEST_NO_KEY", 5, {}})), 2);
  EXPECT_THROW(f.gateway.complete(evolve_request()), GatewayUnavailableError);
  EXPECT_EQ(hits.load(), 3);
}

TEST(HttpProvider, ParsesChatCompletion) {
  std::string seen_body;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hello"}}]})", "application/json");
  });
  Fixture f;
  f.use(std::shared_ptr<Provider>(make_http_provider({server.url(), "model-x", "VIZFORGE_TEST_NO_KEY", 5, {}})));
  GatewayRequest r;
  r.role = JudgeRole::kVisionJudge;
  r.template_id = "judge";
  r.variables = {{"code", "c"}};
  r.attachments = {std::string(64, 'b')};
  EXPECT_EQ(f.gateway.complete(r), "hello");
  const auto body = Json::parse(seen_body);
  EXPECT_EQ(body["model"], "model-x");
  EXPECT_EQ(body["messages"][0]["content"][1]["type"], "image_url");
}

TEST(HttpProvider, ClientErrorIsNotRetried) {
  std::atomic<int> hits{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
  });
  Fixture f;
  f.use(std::shared_ptr<Provider>(make_http_provider({server.url(), "m", "VIZFORGE_TEST_NO_KEY", 5, {}})), 2);
  EXPECT_THROW(f.gateway.complete(evolve_request()), GatewayUnavailableError);
  EXPECT_EQ(hits.load(), 1);
}

}  // namespace
}  // namespace vizforge
