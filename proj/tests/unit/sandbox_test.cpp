// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <signal.h>

#include <chrono>
#include <future>

#include "test_support.hpp"
#include "vizforge/common/errors.hpp"
#include "vizforge/common/hash.hpp"
#include "vizforge/sandbox/sandbox.hpp"

namespace vizforge {
namespace {

using namespace std::chrono_literals;
using testing::TempDir;

const std::string kPng = std::string("\x89PNG\r\n\x1a\n", 8) + "fake image body";

EnvProfile shell(std::chrono::milliseconds timeout = 10s, std::chrono::milliseconds grace = 1s) {
  EnvProfile p;
  p.profile_id = "shell";
  p.command = {"/bin/sh", "{main}"};
  p.extension = "sh";
  p.timeout = timeout;
  p.grace = grace;
  return p;
}

struct Box {
  TempDir dir;
  CorpusStore store{dir / "store"};
  ProcessSandbox sandbox{&store, SandboxOptions{dir / "ws", "test", 8192, 4}};
};

TEST(Sandbox, CleanExitWithOneMatchingImagePasses) {
  Box b;
  auto p = shell();
  p.artifact_globs = {"out/*.png"};
  p.min_artifacts = 1;
  const auto r = b.sandbox.execute("printf '" + std::string("\\211PNG\\r\\n\\032\\nbody") +
                                       "' > out/plot.png\necho drawn > out/notes.txt\n",
                                   p);
  EXPECT_TRUE(r.passed) << r.stderr_tail;
  EXPECT_EQ(r.termination_reason, TerminationReason::kExit);
  EXPECT_EQ(r.exit_code, 0);
  ASSERT_EQ(r.artifacts.size(), 1u);
  const auto art = b.store.resolve_artifact(r.artifacts[0]);
  EXPECT_EQ(art.media_kind, MediaKind::kImage);
  EXPECT_EQ(art.bytes.substr(1, 3), "PNG");
}

TEST(Sandbox, MissingRequiredArtifactFailsTheGate) {
  Box b;
  auto p = shell();
  p.artifact_globs = {"out/*.png"};
  p.min_artifacts = 1;
  const auto r = b.sandbox.execute("echo computed only\n", p);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.exit_code, 0);
  ASSERT_TRUE(r.diagnostic);
  EXPECT_NE(r.diagnostic->find("no artifact produced"), std::string::npos);
}

TEST(Sandbox, NonZeroExitKeepsStderr) {
  Box b;
  const auto r = b.sandbox.execute("echo 'NameError: name x is not defined' >&2\nexit 1\n", shell());
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.termination_reason, TerminationReason::kExit);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.stderr_tail.find("NameError"), std::string::npos);
}

TEST(Sandbox, InfiniteLoopIsStoppedAtTimeout) {
  Box b;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = b.sandbox.execute("while :; do :; done\n", shell(300ms, 200ms));
  const auto wall = std::chrono::steady_clock::now() - t0;
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.termination_reason, TerminationReason::kTimeout);
  EXPECT_LE(wall, 500ms + 150ms);
}

TEST(Sandbox, IgnoredTermIsKilledAfterGrace) {
  Box b;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = b.sandbox.execute("trap '' TERM\nwhile :; do sleep 0.01; done\n", shell(200ms, 300ms));
  const auto wall = std::chrono::steady_clock::now() - t0;
  EXPECT_EQ(r.termination_reason, TerminationReason::kTimeout);
  EXPECT_EQ(r.signal, SIGKILL);
  EXPECT_GE(wall, 450ms);
  EXPECT_LE(wall, 500ms + 150ms);
}

TEST(Sandbox, HardDeadlineHoldsForAssortedPrograms) {
  Box b;
  const std::vector<std::string> programs = {
      "sleep 30\n",
      "trap '' TERM\nsleep 30\n",
      "sleep 30 &\nsleep 30 &\nwait\n",
      "trap '' TERM\n(trap '' TERM; while :; do :; done) &\nwhile :; do :; done\n",
      "yes | head -c 100000000 > /dev/null; while :; do echo spam; done\n",
  };
  for (const auto& prog : programs) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = b.sandbox.execute(prog, shell(200ms, 200ms));
    const auto wall = std::chrono::steady_clock::now() - t0;
    EXPECT_EQ(r.termination_reason, TerminationReason::kTimeout) << prog;
    EXPECT_LE(wall, 400ms + 300ms) << prog;
  }
}

TEST(Sandbox, LeftoverBackgroundProcessesDoNotDelayTheResult) {
  Box b;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = b.sandbox.execute("sleep 30 &\necho done\n", shell(5s, 1s));
  EXPECT_TRUE(r.passed);
  EXPECT_LE(std::chrono::steady_clock::now() - t0, 2s);
  EXPECT_NE(r.stdout_tail.find("done"), std::string::npos);
}

TEST(Sandbox, SpawnFailureIsAResultNotAnException) {
  Box b;
  auto p = shell();
  p.command = {"/nonexistent/vizforge-interpreter", "{main}"};
  ValidationResult r;
  ASSERT_NO_THROW(r = b.sandbox.execute("anything", p));
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.termination_reason, TerminationReason::kSpawnFailure);
  EXPECT_NE(r.stderr_tail.find("vizforge-interpreter"), std::string::npos);
}

TEST(Sandbox, ProfileNoneIsAPrecondition) {
  Box b;
  EXPECT_THROW(b.sandbox.execute("x", default_profiles().at("none")), PreconditionError);
}

TEST(Sandbox, WorkspaceIsPrivateAndRemoved) {
  Box b;
  const auto prog = "echo probe > probe.txt\npwd\necho \"$HOME|$TMPDIR\"\nls\n";
  auto run = [&] { return b.sandbox.execute(prog, shell()); };
  auto f1 = std::async(std::launch::async, run);
  auto f2 = std::async(std::launch::async, run);
  const auto r1 = f1.get();
  const auto r2 = f2.get();
  const auto ws1 = split_lines(r1.stdout_tail)[0];
  const auto ws2 = split_lines(r2.stdout_tail)[0];
  EXPECT_NE(ws1, ws2);
  for (const auto& r : {r1, r2}) {
    const auto lines = split_lines(r.stdout_tail);
    EXPECT_EQ(lines[1], lines[0] + "|" + lines[0] + "/tmp");
    EXPECT_NE(r.stdout_tail.find("main.sh"), std::string::npos);
    EXPECT_NE(r.stdout_tail.find("probe.txt"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(lines[0]));
  }
  EXPECT_TRUE(std::filesystem::is_empty(b.dir / "ws"));
}

TEST(Sandbox, ResourceFilesAreWrittenBesideMain) {
  Box b;
  auto p = shell();
  p.resource_files = {{"data/input.csv", "a,b\n1,2\n"}};
  const auto r = b.sandbox.execute("cat data/input.csv\n", p);
  EXPECT_TRUE(r.passed);
  EXPECT_NE(r.stdout_tail.find("1,2"), std::string::npos);
}

TEST(Sandbox, MemoryCapApplies) {
  Box b;
  auto p = shell();
  p.memory_bytes = 64ULL << 20;
  const auto r = b.sandbox.execute("exec python3 -c 'x = bytearray(512 * 1024 * 1024)'\n", p);
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.stderr_tail.find("MemoryError"), std::string::npos) << r.stderr_tail;
}

TEST(Sandbox, OutputTailsAreBounded) {
  Box b;
  const auto r = b.sandbox.execute("i=0; while [ $i -lt 5000 ]; do echo line-$i; i=$((i+1)); done\n", shell());
  EXPECT_LE(r.stdout_tail.size(), 8192u);
  EXPECT_NE(r.stdout_tail.find("line-4999"), std::string::npos);
}

TEST(Sandbox, CaptureManifestDrivesArtifacts) {
  Box b;
  auto p = shell();
  p.capture_manifest = true;
  p.min_artifacts = 1;
  const auto ok = b.sandbox.execute(
      "printf 'frame' > \"$VIZFORGE_OUT_DIR/f.png\"\n"
      "echo '{\"produced\":[{\"path\":\"f.png\",\"media_kind\":\"image\"}],\"wall_time\":0.1}' > out/manifest.json\n",
      p);
  EXPECT_TRUE(ok.passed) << ok.diagnostic.value_or("");
  EXPECT_EQ(ok.artifacts.size(), 1u);

  const auto errored = b.sandbox.execute(
      "echo '{\"produced\":[],\"error\":\"NameError: x\",\"wall_time\":0.1}' > out/manifest.json\n", p);
  EXPECT_FALSE(errored.passed);
  EXPECT_NE(errored.diagnostic.value_or("").find("NameError"), std::string::npos);

  const auto missing = b.sandbox.execute("true\n", p);
  EXPECT_FALSE(missing.passed);
  EXPECT_NE(missing.diagnostic.value_or("").find("no capture manifest"), std::string::npos);

  const auto escaping = b.sandbox.execute(
      "printf x > outside.png\n"
      "echo '{\"produced\":[{\"path\":\"../outside.png\",\"media_kind\":\"image\"}],\"wall_time\":0}' > "
      "out/manifest.json\n",
      p);
  EXPECT_FALSE(escaping.passed);
  EXPECT_NE(escaping.diagnostic.value_or("").find("outside"), std::string::npos);
}

TEST(Sandbox, EngineErrorTextFailsWolframStyleRuns) {
  Box b;
  auto p = shell();
  p.error_patterns = default_profiles().at("wolfram-eval").error_patterns;
  const auto bad = b.sandbox.execute("echo 'Power::infy: Infinite expression 1/0 encountered.'\n", p);
  EXPECT_FALSE(bad.passed);
  EXPECT_NE(bad.diagnostic.value_or("").find("Power::infy"), std::string::npos);
  EXPECT_FALSE(b.sandbox.execute("echo '$Failed'\n", p).passed);
  EXPECT_TRUE(b.sandbox.execute("echo 'Graphics[{Circle[]}]'\n", p).passed);
}

TEST(Sandbox, TestRunnerRequiresAllTestsPass) {
  Box b;
  auto p = shell();
  p.tests = true;
  const auto bad = b.sandbox.execute("echo '3 passed, 1 failed'\n", p);
  EXPECT_FALSE(bad.passed);
  EXPECT_EQ(bad.test_summary, (TestSummary{3, 1}));
  const auto good = b.sandbox.execute("echo '4 passed'\n", p);
  EXPECT_TRUE(good.passed);
  EXPECT_EQ(good.test_summary, (TestSummary{4, 0}));
}

TEST(Profiles, Defaults) {
  const auto p = default_profiles();
  for (const auto* id : {"python-viz", "manim-render", "wolfram-eval", "web-render", "test-runner", "none"}) {
    ASSERT_EQ(p.count(id), 1u) << id;
  }
  EXPECT_EQ(p.at("python-viz").timeout, 60s);
  EXPECT_EQ(p.at("manim-render").timeout, 300s);
  EXPECT_EQ(p.at("wolfram-eval").timeout, 300s);
  EXPECT_EQ(p.at("web-render").timeout, 300s);
  EXPECT_EQ(p.at("web-render").settle_seconds, 2);
  for (const auto& [id, prof] : p) {
    EXPECT_EQ(prof.grace, 5s) << id;
    EXPECT_EQ(prof.memory_bytes, 2ULL << 30) << id;
  }
  EXPECT_FALSE(p.at("none").executes());
  EXPECT_EQ(p.at("python-viz").command.back(), "{out_dir}");
}

TEST(Profiles, OverlayAndErrors) {
  const auto p = profiles_from_json({{"python-viz", {{"timeout", 12.5}, {"memory_mb", 512}}},
                                     {"custom", {{"command", {"bash", "{main}"}}, {"extension", "sh"}}}});
  EXPECT_EQ(p.at("python-viz").timeout, 12500ms);
  EXPECT_EQ(p.at("python-viz").memory_bytes, 512ULL << 20);
  EXPECT_TRUE(p.at("python-viz").capture_manifest);
  EXPECT_EQ(p.at("custom").extension, "sh");
  try {
    profiles_from_json({{"none", {{"command", {"x"}}}}, {"python-viz", {{"timeout", 0}, {"colour", 1}}}, {"bare", Json::object()}});
    FAIL();
  } catch (const ConfigError& e) {
    const auto msg = std::string(e.what());
    EXPECT_NE(msg.find("profiles.none"), std::string::npos);
    EXPECT_NE(msg.find("profiles.python-viz.timeout"), std::string::npos);
    EXPECT_NE(msg.find("profiles.python-viz.colour"), std::string::npos);
    EXPECT_NE(msg.find("profiles.bare.command"), std::string::npos);
  }
}

TEST(CaptureManifest, SchemaAndChecks) {
  TempDir d;
  testing::write_text(d / "out/a.png", "x");
  testing::write_text(d / "out/empty.png", "");
  const auto m = parse_capture_manifest(Json::parse(
      R"({"produced":[{"path":"a.png","media_kind":"image"},{"path":"empty.png","media_kind":"image"},)"
      R"({"path":"gone.mp4","media_kind":"video"}],"wall_time":1.5})"));
  EXPECT_EQ(m.produced.size(), 3u);
  EXPECT_FALSE(m.error);
  const auto problems = check_capture_manifest(m, d / "out");
  ASSERT_EQ(problems.size(), 2u);
  EXPECT_NE(problems[0].find("empty"), std::string::npos);
  EXPECT_NE(problems[1].find("missing"), std::string::npos);
  EXPECT_EQ(parse_capture_manifest(to_json(m)).produced.size(), 3u);
  EXPECT_THROW(parse_capture_manifest(Json::parse(R"({"produced":[{"path":"a","media_kind":"gif"}],"wall_time":0})")),
               MalformedItemError);
  EXPECT_THROW(parse_capture_manifest(Json::parse(R"({"produced":[]})")), MalformedItemError);
}

TEST(Glob, Patterns) {
  EXPECT_TRUE(glob_match("out/*.png", "out/a.png"));
  EXPECT_FALSE(glob_match("out/*.png", "out/sub/a.png"));
  EXPECT_TRUE(glob_match("out/**.png", "out/sub/a.png"));
  EXPECT_TRUE(glob_match("*.mp4", "scene.mp4"));
  EXPECT_FALSE(glob_match("*.mp4", "media/scene.mp4"));
}

TEST(Noop, FailsOnlyOnMarker) {
  NoopExecutor noop;
  const auto prof = default_profiles().at("python-viz");
  EXPECT_TRUE(noop.execute("print(1)\n", prof).passed);
  const auto r = noop.execute("print(1)\n# vizforge-stub: fail\n", prof);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_THROW(noop.execute("x", default_profiles().at("none")), PreconditionError);
}

TEST(RouteFailure, RetryThenDrop) {
  ValidationResult failed;
  failed.exit_code = 1;
  failed.stderr_tail = std::string(5000, 'x') + "ZeroDivisionError: division by zero";
  SynthesisTask t;
  t.task_id = "t";
  StageCounters c;
  const auto retry = route_failure(t, failed, 3, &c);
  EXPECT_EQ(retry.kind, RetryDecision::Kind::kRetry);
  EXPECT_NE(retry.feedback.find("ZeroDivisionError"), std::string::npos);
  EXPECT_NE(retry.feedback.find("exit code 1"), std::string::npos);
  EXPECT_LE(retry.feedback.size(), 2000u);
  t.attempt = 3;
  EXPECT_EQ(route_failure(t, failed, 3, &c).kind, RetryDecision::Kind::kDrop);
  EXPECT_EQ(c.retried, 1);
  EXPECT_EQ(c.rejected, 1);
  ValidationResult passed;
  passed.passed = true;
  passed.exit_code = 0;
  EXPECT_THROW(route_failure(t, passed, 3), PreconditionError);
}

TEST(RouteFailure, TimeoutFeedbackNamesTheTimeout) {
  ValidationResult r;
  r.termination_reason = TerminationReason::kTimeout;
  r.duration_ms = 2100;
  SynthesisTask t;
  EXPECT_NE(route_failure(t, r, 1).feedback.find("timed out"), std::string::npos);
}

}  // namespace
}  // namespace vizforge
