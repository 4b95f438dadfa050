// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <csignal>
#include <iostream>
#include <thread>

#include "vizforge/common/errors.hpp"
#include "vizforge/pipeline/pipeline.hpp"

namespace {

using vizforge::Json;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

void install_signals() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

void log(const std::string& line) { std::cerr << "vizforge: " << line << "\n"; }

void emit(const Json& j) { std::cout << j.dump(2) << std::endl; }

struct Globals {
  std::string config;
  std::optional<std::string> run_id;
  bool stub = false;
  std::optional<int> max_parallel;
};

int run_stages(const Globals& g, std::vector<vizforge::Stage> stages) {
  const auto config = vizforge::load_config(g.config);
  vizforge::RunOptions o;
  o.run_id = g.run_id;
  o.stub_gateway = g.stub;
  o.max_parallel = g.max_parallel;
  o.stages = std::move(stages);
  o.stop = &g_stop;
  const auto s = vizforge::run_pipeline(config, o);
  for (const auto& e : s.events) log(e);
  if (s.noop) log("run " + s.run_id + " is already complete; nothing to do");
  emit(vizforge::to_json(s));
  if (s.fatal_stage) {
    log("stage " + *s.fatal_stage + " failed: " + s.fatal_error.value_or(""));
    return 1;
  }
  if (s.interrupted) {
    log("interrupted; run " + s.run_id + " checkpointed");
    return 130;
  }
  return 0;
}

int run_bench(const Globals& g) {
  const auto config = vizforge::load_config(g.config);
  vizforge::BenchRunOptions o;
  o.stub_gateway = g.stub;
  o.max_parallel = g.max_parallel;
  try {
    const auto out = vizforge::run_bench(config, o);
    std::cerr << vizforge::render_report_text(out.report);
    emit({{"report", vizforge::to_json(out.report)},
          {"records", out.records.size()},
          {"review_items_added", out.review_items_added},
          {"out", config.bench_dir.string()}});
    return 0;
  } catch (const vizforge::ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    log("stage bench failed: " + std::string(e.what()));
    emit({{"fatal_stage", "bench"}, {"fatal_error", e.what()}});
    return 1;
  }
}

int run_report(const Globals& g) {
  const auto config = vizforge::load_config(g.config);
  try {
    const auto report = vizforge::refresh_bench_report(config);
    std::cerr << vizforge::render_report_text(report);
    emit({{"report", vizforge::to_json(report)}, {"out", config.bench_dir.string()}});
    return 0;
  } catch (const vizforge::ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    log("stage report failed: " + std::string(e.what()));
    emit({{"fatal_stage", "report"}, {"fatal_error", e.what()}});
    return 1;
  }
}

int serve_review(const Globals& g, const std::optional<std::string>& host, const std::optional<int>& port) {
  const auto config = vizforge::load_config(g.config);
  if (config.review.annotators.empty()) log("no annotators configured; every request will be refused");
  vizforge::ReviewStore review(config.review_dir, config.review);
  vizforge::CorpusStore store(config.store_root);
  vizforge::ReviewServer server(review, &store, config.review_static_dir);
  const auto h = host.value_or(config.review_host);
  const int bound = server.bind(h, port.value_or(config.review_port));
  emit({{"review_serve", {{"host", h}, {"port", bound}}}});
  std::thread watcher([&] {
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
  });
  server.serve();
  g_stop = true;
  watcher.join();
  log("review server stopped");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vizforge: build and curate code-visualization training data"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Pipeline config file (JSON)")->required();
  app.add_option("--run-id", g.run_id, "Open or resume this run id");
  app.add_flag("--stub-gateway", g.stub, "Use the deterministic stub model for every role");
  app.add_option("--max-parallel", g.max_parallel, "Worker count override")->check(CLI::Range(1, 256));

  std::vector<std::pair<CLI::App*, std::vector<vizforge::Stage>>> stage_cmds;
  for (const auto s : vizforge::kAllStages) {
    const std::string name(vizforge::to_string(s));
    stage_cmds.emplace_back(app.add_subcommand(name, "Run the " + name + " stage"), std::vector{s});
  }
  stage_cmds.emplace_back(app.add_subcommand("run", "Run every stage in order"), std::vector<vizforge::Stage>{});
  auto* bench = app.add_subcommand("bench", "Generate, execute and score the benchmark tasks");
  auto* report = app.add_subcommand("report", "Rebuild the bench report with current review scores");
  auto* serve = app.add_subcommand("review-serve", "Serve the review API");
  std::optional<std::string> host;
  std::optional<int> port;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port; 0 picks a free one")->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the config-error exit code.
    return app.exit(e) == 0 ? 0 : 2;
  }
  install_signals();

  try {
    for (auto& [cmd, stages] : stage_cmds) {
      if (cmd->parsed()) return run_stages(g, stages);
    }
    if (bench->parsed()) return run_bench(g);
    if (report->parsed()) return run_report(g);
    if (serve->parsed()) return serve_review(g, host, port);
  } catch (const vizforge::ConfigError& e) {
    for (const auto& k : e.offending_keys()) log("config error: " + k);
    return 2;
  } catch (const std::exception& e) {
    log("fatal: " + std::string(e.what()));
    return 1;
  }
  return 0;
}
