// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include <mutex>
#include <thread>

#include "vizforge/common/errors.hpp"
#include "vizforge/pipeline/pipeline.hpp"

namespace vizforge {
namespace fs = std::filesystem;

namespace {

std::vector<BenchScore> apply_review(std::vector<BenchScore> scores, const ReviewStore& review) {
  for (auto& s : scores) {
    if (s.unscored || s.s_exec == 0) continue;
    s = with_faith(std::move(s), review.item_score(ReviewKind::kBenchFaith, s.task_id));
  }
  return scores;
}

std::map<std::string, BenchScore> load_scores(const fs::path& journal) {
  std::map<std::string, BenchScore> out;
  for (const auto& j : read_jsonl_journal(journal)) {
    auto s = bench_score_from_json(j);
    out.insert_or_assign(s.task_id, std::move(s));
  }
  return out;
}

}  // namespace

BenchOutcome run_bench(const PipelineConfig& config, const BenchRunOptions& options) {
  if (!config.bench_tasks) throw ConfigError({"bench.tasks (missing; required by the bench command)"});
  const auto tasks = load_bench_tasks(*config.bench_tasks);
  const int parallel = options.max_parallel.value_or(config.max_parallel);
  fs::create_directories(config.bench_dir);

  CorpusStore store(config.store_root);
  auto gateway = make_gateway(config, &store, options.stub_gateway, options.providers);
  gateway->set_call_log(config.bench_dir / "calls.jsonl", "bench");
  std::shared_ptr<Executor> executor = options.executor;
  if (!executor) {
    if (config.executor == "noop") {
      executor = std::make_shared<NoopExecutor>(config.stub.fail_marker);
    } else {
      SandboxOptions so;
      so.workspace_root = config.workspace_root;
      so.created_by = "bench";
      so.tail_bytes = config.tail_bytes;
      so.max_parallel = parallel;
      executor = std::make_shared<ProcessSandbox>(&store, so);
    }
  }

  BenchOutcome out;
  SuiteOptions suite;
  suite.journal = config.bench_dir / "records.jsonl";
  suite.max_parallel = parallel;
  out.records = run_suite(tasks, *gateway, *executor, config.profiles, suite);

  std::map<std::string, const BenchTask*> by_id;
  for (const auto& t : tasks) by_id[t.task_id] = &t;
  const auto scores_path = config.bench_dir / "scores.jsonl";
  auto done = load_scores(scores_path);
  std::vector<const BenchRecord*> todo;
  for (const auto& r : out.records) {
    if (!done.count(r.task_id)) todo.push_back(&r);
  }
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(todo.size(), static_cast<std::size_t>(std::max(parallel, 1)));
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < todo.size(); i = next++) {
        try {
          auto s = score_record(*todo[i], *by_id.at(todo[i]->task_id), *gateway);
          std::lock_guard lock(mu);
          append_line_durable(scores_path, canonical_dump(to_json(s)));
          done.insert_or_assign(s.task_id, std::move(s));
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          next = todo.size();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);

  ReviewStore review(config.review_dir, config.review);
  for (const auto& r : out.records) {
    if (r.s_exec != 1 || r.artifacts.empty()) continue;
    ReviewItem item;
    item.kind = ReviewKind::kBenchFaith;
    item.subject_id = r.task_id;
    item.item_id = review_item_id(item.kind, r.task_id);
    item.media = r.artifacts;
    item.instruction = by_id.at(r.task_id)->instruction;
    out.review_items_added += review.add_item(std::move(item));
  }

  for (const auto& t : tasks) out.scores.push_back(done.at(t.task_id));
  out.scores = apply_review(std::move(out.scores), review);
  out.report = aggregate_report(out.scores);
  write_report(config.bench_dir, out.report);
  return out;
}

BenchReport refresh_bench_report(const PipelineConfig& config) {
  std::vector<BenchScore> scores;
  for (auto& [id, s] : load_scores(config.bench_dir / "scores.jsonl")) scores.push_back(std::move(s));
  ReviewStore review(config.review_dir, config.review);
  auto report = aggregate_report(apply_review(std::move(scores), review));
  write_report(config.bench_dir, report);
  return report;
}

}  // namespace vizforge
