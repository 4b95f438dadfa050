// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "vizforge/bench/bench.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "vizforge/common/errors.hpp"

namespace vizforge {
namespace {

std::string code_language(Engine e) { return e == Engine::kWolfram ? "wolfram" : "python"; }

template <typename T>
std::optional<T> opt(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

BenchRecord run_one(const BenchTask& task, Gateway& gateway, Executor& executor,
                    const std::map<std::string, EnvProfile>& profiles, const SuiteOptions& options) {
  BenchRecord rec;
  rec.task_id = task.task_id;
  rec.engine = task.engine;
  GatewayRequest req;
  req.role = JudgeRole::kSynthesizer;
  req.template_id = options.generate_template;
  req.variables = {{"engine", std::string(to_string(task.engine))}, {"instruction", task.instruction}};
  req.expect.kind = OutputShape::Kind::kText;
  req.expect.code_language = code_language(task.engine);
  req.task_id = task.task_id;
  const auto response = gateway.complete(req);

  const auto code = last_fenced_block(response);
  if (!code || trim(*code).empty()) {
    rec.reason = "no_code";
    return rec;
  }
  rec.generated_code = *code;
  const auto profile = profiles.find(task.env_profile_id);
  if (profile == profiles.end()) {
    rec.reason = "error: unknown env profile " + task.env_profile_id;
    return rec;
  }
  try {
    auto v = executor.execute(*code, profile->second);
    rec.s_exec = v.passed ? 1 : 0;
    rec.artifacts = v.artifacts;
    if (!v.passed) {
      if (v.termination_reason != TerminationReason::kExit) rec.reason = std::string(to_string(v.termination_reason));
      else if (v.diagnostic) rec.reason = "gate: " + *v.diagnostic;
      else rec.reason = "exit code " + std::to_string(v.exit_code.value_or(-1));
    }
    rec.validation = std::move(v);
  } catch (const PreconditionError& e) {
    rec.reason = std::string("error: ") + e.what();
  }
  return rec;
}

}  // namespace

std::string_view to_string(Engine e) { return e == Engine::kWolfram ? "wolfram" : "manim"; }

std::optional<Engine> parse_engine(std::string_view s) {
  if (s == "manim") return Engine::kManim;
  if (s == "wolfram") return Engine::kWolfram;
  return std::nullopt;
}

std::string_view profile_for(Engine e) { return e == Engine::kWolfram ? "wolfram-eval" : "manim-render"; }

BenchTask bench_task_from_json(const Json& j) {
  if (!j.is_object()) throw MalformedItemError("bench task must be an object");
  auto str = [&](const char* key, bool required) -> std::string {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
      if (required) throw MalformedItemError(std::string("bench task missing ") + key);
      return {};
    }
    if (!it->is_string()) throw MalformedItemError(std::string("bench task field ") + key + " must be a string");
    return it->get<std::string>();
  };
  BenchTask t;
  t.task_id = str("task_id", true);
  if (trim(t.task_id).empty()) throw MalformedItemError("bench task has an empty task_id");
  const auto engine = parse_engine(str("engine", true));
  if (!engine) throw MalformedItemError("bench task " + t.task_id + " has an unknown engine");
  t.engine = *engine;
  t.instruction = str("instruction", true);
  t.reference_code = str("reference_code", true);
  t.env_profile_id = str("env_profile_id", false);
  if (t.env_profile_id.empty()) t.env_profile_id = std::string(profile_for(t.engine));
  if (t.env_profile_id != profile_for(t.engine)) {
    throw MalformedItemError("bench task " + t.task_id + ": engine " + std::string(to_string(t.engine)) +
                             " requires profile " + std::string(profile_for(t.engine)));
  }
  return t;
}

Json to_json(const BenchTask& t) {
  return {{"task_id", t.task_id},
          {"engine", to_string(t.engine)},
          {"instruction", t.instruction},
          {"reference_code", t.reference_code},
          {"env_profile_id", t.env_profile_id}};
}

std::vector<BenchTask> load_bench_tasks(const std::filesystem::path& path) {
  std::vector<BenchTask> tasks;
  std::set<std::string> seen;
  const auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(i + 1) + ": ";
    try {
      auto t = bench_task_from_json(Json::parse(lines[i]));
      if (!seen.insert(t.task_id).second) throw MalformedItemError("duplicate task_id " + t.task_id);
      tasks.push_back(std::move(t));
    } catch (const Json::exception& e) {
      throw MalformedItemError(where + e.what());
    } catch (const MalformedItemError& e) {
      throw MalformedItemError(where + e.what());
    }
  }
  return tasks;
}

Json to_json(const BenchRecord& r) {
  Json j = {{"task_id", r.task_id},
            {"engine", to_string(r.engine)},
            {"generated_code", r.generated_code ? Json(*r.generated_code) : Json(nullptr)},
            {"s_exec", r.s_exec},
            {"reason", r.reason ? Json(*r.reason) : Json(nullptr)},
            {"validation", r.validation ? to_json(*r.validation) : Json(nullptr)},
            {"artifacts", r.artifacts}};
  return j;
}

BenchRecord bench_record_from_json(const Json& j) {
  BenchRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  r.engine = parse_engine(j.at("engine").get<std::string>()).value();
  r.generated_code = opt<std::string>(j, "generated_code");
  r.s_exec = j.at("s_exec").get<int>();
  r.reason = opt<std::string>(j, "reason");
  if (const auto it = j.find("validation"); it != j.end() && !it->is_null()) r.validation = validation_from_json(*it);
  r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  return r;
}

std::vector<BenchRecord> run_suite(const std::vector<BenchTask>& tasks, Gateway& gateway, Executor& executor,
                                   const std::map<std::string, EnvProfile>& profiles, const SuiteOptions& options) {
  if (tasks.empty()) throw PreconditionError("bench task set is empty");
  std::map<std::string, BenchRecord> done;
  if (!options.journal.empty()) {
    for (const auto& j : read_jsonl_journal(options.journal)) {
      auto r = bench_record_from_json(j);
      done.emplace(r.task_id, std::move(r));
    }
  }
  std::vector<std::optional<BenchRecord>> out(tasks.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (const auto it = done.find(tasks[i].task_id); it != done.end()) out[i] = it->second;
    else todo.push_back(i);
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    while (!abort) {
      const auto k = next++;
      if (k >= todo.size()) return;
      const auto& task = tasks[todo[k]];
      try {
        auto rec = run_one(task, gateway, executor, profiles, options);
        std::lock_guard lock(mu);
        if (!options.journal.empty()) append_line_durable(options.journal, canonical_dump(to_json(rec)));
        out[todo[k]] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        abort = true;
      }
    }
  };
  const auto n = std::max<std::size_t>(1, std::min<std::size_t>(options.max_parallel, todo.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<BenchRecord> records;
  records.reserve(out.size());
  for (auto& r : out) records.push_back(std::move(*r));
  return records;
}

Json to_json(const BenchScore& s) {
  return {{"task_id", s.task_id},
          {"engine", to_string(s.engine)},
          {"s_exec", s.s_exec},
          {"s_sim", s.s_sim ? Json(*s.s_sim) : Json(nullptr)},
          {"s_align", s.s_align ? Json(*s.s_align) : Json(nullptr)},
          {"s_faith", s.s_faith ? Json(s.s_faith->to_string()) : Json(nullptr)},
          {"overall", s.overall.to_string()},
          {"faith_included", s.faith_included},
          {"unscored", s.unscored},
          {"error", s.error ? Json(*s.error) : Json(nullptr)}};
}

BenchScore bench_score_from_json(const Json& j) {
  BenchScore s;
  s.task_id = j.at("task_id").get<std::string>();
  s.engine = parse_engine(j.at("engine").get<std::string>()).value();
  s.s_exec = j.at("s_exec").get<int>();
  s.s_sim = opt<int>(j, "s_sim");
  s.s_align = opt<int>(j, "s_align");
  if (const auto f = opt<std::string>(j, "s_faith")) s.s_faith = Rational::parse(*f);
  s.overall = Rational::parse(j.at("overall").get<std::string>());
  s.faith_included = j.at("faith_included").get<bool>();
  s.unscored = j.at("unscored").get<bool>();
  s.error = opt<std::string>(j, "error");
  return s;
}

BenchScore make_score(const std::string& task_id, Engine engine, int s_exec, std::optional<int> s_sim,
                      std::optional<int> s_align, std::optional<Rational> s_faith) {
  if (s_exec != 0 && s_exec != 1) throw PreconditionError("s_exec must be 0 or 1");
  auto in_range = [](int v) { return v >= 1 && v <= 5; };
  if (s_faith && (*s_faith < Rational(1) || *s_faith > Rational(5))) {
    throw PreconditionError("faith score " + s_faith->to_string() + " outside [1, 5]");
  }
  BenchScore s;
  s.task_id = task_id;
  s.engine = engine;
  s.s_exec = s_exec;
  if (s_exec == 0) {
    if (s_sim || s_align) throw PreconditionError("judge scores given for a record that did not execute");
    s.overall = Rational(0);
    return s;
  }
  if (!s_sim || !s_align || !in_range(*s_sim) || !in_range(*s_align)) {
    throw PreconditionError("executed record needs s_sim and s_align in [1, 5]");
  }
  s.s_sim = s_sim;
  s.s_align = s_align;
  s.s_faith = s_faith;
  s.faith_included = s_faith.has_value();
  s.overall = Rational(*s_sim + *s_align) + s_faith.value_or(Rational(0));
  return s;
}

BenchScore with_faith(BenchScore score, std::optional<Rational> s_faith) {
  if (score.unscored || score.s_exec == 0) return score;
  auto rescored = make_score(score.task_id, score.engine, score.s_exec, score.s_sim, score.s_align, s_faith);
  return rescored;
}

JudgeSchema bench_judge_schema() {
  JudgeSchema s;
  s.name = "bench-judge";
  s.strict = true;
  for (const auto* dim : {"code_similarity", "instruction_alignment"}) {
    s.scores.push_back({{dim, "score"}, 1, 5});
    s.texts.push_back({{dim, "reasoning"}, true, true});
  }
  return s;
}

BenchScore score_record(const BenchRecord& record, const BenchTask& task, Gateway& gateway,
                        std::optional<Rational> s_faith, const ScoreOptions& options) {
  if (record.task_id != task.task_id) throw PreconditionError("record and task ids differ: " + record.task_id);
  if (record.s_exec == 0) return make_score(record.task_id, record.engine, 0, std::nullopt, std::nullopt, std::nullopt);
  if (!record.validation) throw PreconditionError("record " + record.task_id + " has no validation outcome");

  GatewayRequest req;
  req.role = JudgeRole::kTextJudge;
  req.template_id = options.judge_template;
  req.task_id = record.task_id;
  req.variables = {{"engine", std::string(to_string(task.engine))},
                   {"instruction", task.instruction},
                   {"reference_code", task.reference_code},
                   {"generated_code", record.generated_code.value_or("")}};
  try {
    const auto r = gateway.judge_structured(req, bench_judge_schema());
    return make_score(record.task_id, record.engine, 1, r.scores.at("code_similarity.score"),
                      r.scores.at("instruction_alignment.score"), s_faith);
  } catch (const JudgeFormatError& e) {
    BenchScore s;
    s.task_id = record.task_id;
    s.engine = record.engine;
    s.s_exec = 1;
    s.unscored = true;
    s.error = e.what();
    return s;
  }
}

BenchReport aggregate_report(const std::vector<BenchScore>& scores) {
  struct Acc {
    EngineReport r;
    Rational sum_without{0};
    Rational sum_with{0};
    int executed_scored = 0;
    int executed_with_faith = 0;
  };
  std::map<std::string, Acc> acc;
  BenchReport report;
  for (const auto& s : scores) {
    auto& a = acc[std::string(to_string(s.engine))];
    ++a.r.records;
    ++report.records;
    if (s.s_exec == 1) ++a.r.executed;
    if (s.unscored) {
      ++a.r.unscored;
      ++report.unscored;
      continue;
    }
    ++a.r.scored;
    ++report.scored;
    const Rational without = s.s_exec == 1 ? Rational(*s.s_sim + *s.s_align) : Rational(0);
    a.sum_without = a.sum_without + without;
    if (s.s_exec == 1) ++a.executed_scored;
    if (s.s_exec == 0 || s.faith_included) {
      ++a.r.faith_population;
      a.sum_with = a.sum_with + s.overall;
    }
    if (s.s_exec == 1 && s.faith_included) ++a.executed_with_faith;
  }
  if (report.scored == 0) throw EmptyReportError("no scored bench records to aggregate");
  for (auto& [engine, a] : acc) {
    auto& r = a.r;
    r.exec_rate = static_cast<double>(r.executed) / r.records;
    if (r.scored > 0) r.mean_without_faith = (a.sum_without / Rational(r.scored)).to_double();
    if (r.faith_population > 0) r.mean_with_faith = (a.sum_with / Rational(r.faith_population)).to_double();
    r.faith_coverage = a.executed_scored > 0 ? static_cast<double>(a.executed_with_faith) / a.executed_scored : 0.0;
    r.mean_includes_faith = a.executed_scored > 0 && a.executed_with_faith == a.executed_scored;
    r.mean = r.mean_includes_faith ? *r.mean_with_faith : r.mean_without_faith;
    report.engines[engine] = r;
  }
  return report;
}

Json to_json(const BenchReport& r) {
  Json engines = Json::object();
  for (const auto& [name, e] : r.engines) {
    engines[name] = {{"records", e.records},
                     {"scored", e.scored},
                     {"unscored", e.unscored},
                     {"executed", e.executed},
                     {"exec_rate", e.exec_rate},
                     {"mean", e.mean},
                     {"mean_includes_faith", e.mean_includes_faith},
                     {"mean_without_faith", e.mean_without_faith},
                     {"mean_with_faith", e.mean_with_faith ? Json(*e.mean_with_faith) : Json(nullptr)},
                     {"faith_population", e.faith_population},
                     {"faith_coverage", e.faith_coverage}};
  }
  return {{"engines", engines}, {"records", r.records}, {"scored", r.scored}, {"unscored", r.unscored}};
}

std::string render_report_text(const BenchReport& r) {
  std::string out = "engine   records  scored  unscored  exec_rate  mean   mean_no_faith  mean_faith  faith_cov\n";
  for (const auto& [name, e] : r.engines) {
    char line[256];
    std::snprintf(line, sizeof line, "%-8s %7d %7d %9d %10s %6s %14s %11s %10s\n", name.c_str(), e.records, e.scored,
                  e.unscored, fixed2(e.exec_rate).c_str(),
                  (fixed2(e.mean) + (e.mean_includes_faith ? "*" : "")).c_str(), fixed2(e.mean_without_faith).c_str(),
                  e.mean_with_faith ? fixed2(*e.mean_with_faith).c_str() : "-", fixed2(e.faith_coverage).c_str());
    out += line;
  }
  out += "(* mean includes the faithfulness term)\n";
  return out;
}

void write_report(const std::filesystem::path& dir, const BenchReport& r) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "report.json", to_json(r).dump(2) + "\n");
  write_file_atomic(dir / "report.txt", render_report_text(r));
}

}  // namespace vizforge
