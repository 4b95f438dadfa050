// Copyright 2026 The vizforge Authors
// SPDX-License-Identifier: Apache-2.0

// Thin bindings; structured values cross the boundary as JSON text and the
// Python package decodes them.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vizforge/bench/bench.hpp"
#include "vizforge/common/errors.hpp"
#include "vizforge/decompose/decompose.hpp"
#include "vizforge/pipeline/pipeline.hpp"
#include "vizforge/reward/reward.hpp"
#include "vizforge/sandbox/sandbox.hpp"

namespace py = pybind11;
using namespace vizforge;

namespace {

std::pair<std::int64_t, std::int64_t> pair_of(const Rational& r) { return {r.num(), r.den()}; }

std::string run(const std::string& config_path, const std::vector<std::string>& stages, bool stub_gateway,
                std::optional<std::string> run_id, std::optional<int> max_parallel) {
  const auto config = load_config(config_path);
  RunOptions o;
  o.stub_gateway = stub_gateway;
  o.run_id = std::move(run_id);
  o.max_parallel = max_parallel;
  for (const auto& s : stages) {
    const auto st = parse_stage(s);
    if (!st) throw ConfigError({"stage " + s + " (unknown)"});
    o.stages.push_back(*st);
  }
  RunSummary summary;
  {
    py::gil_scoped_release release;
    summary = run_pipeline(config, o);
  }
  return to_json(summary).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "vizforge native core";

  // Translators run newest first, so the base class is registered first.
  auto& error = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", error.ptr());

  m.def(
      "reward_mean", [](const std::map<std::string, int>& dims) { return pair_of(reward_mean(dims)); },
      "Mean of the four reward dimensions as (numerator, denominator).");
  m.def("edit_final", &edit_final, "Final verdict of an edit judgement: 1 when every dimension is at least 3.");
  m.def(
      "bench_overall",
      [](int s_exec, std::optional<int> s_sim, std::optional<int> s_align, std::optional<int> s_faith) {
        std::optional<Rational> faith;
        if (s_faith) faith = Rational(*s_faith);
        return pair_of(make_score("t", Engine::kManim, s_exec, s_sim, s_align, faith).overall);
      },
      py::arg("s_exec"), py::arg("s_sim") = py::none(), py::arg("s_align") = py::none(),
      py::arg("s_faith") = py::none());
  m.def(
      "parse_units",
      [](const std::string& source, const std::string& profile_json) {
        const auto profile = profile_json.empty() ? DecomposeProfile{} : profile_from_json(Json::parse(profile_json));
        Json out = Json::array();
        for (const auto& u : parse_units(source, profile)) out.push_back(to_json(u, profile.template_id));
        return out.dump();
      },
      py::arg("source"), py::arg("profile_json") = "");
  m.def(
      "check_capture_manifest",
      [](const std::string& manifest_json, const std::string& out_dir) {
        return check_capture_manifest(parse_capture_manifest(Json::parse(manifest_json)), out_dir);
      },
      "Problems with a shim's manifest.json; empty when it is valid.");
  m.def("config_hash", [](const std::string& json) { return config_hash(Json::parse(json)); });
  m.def(
      "corpus_summary",
      [](const std::string& store_root) {
        CorpusStore store(store_root);
        const auto c = count_corpus(store);
        return Json{{"records", c.records},
                    {"candidates", c.candidates},
                    {"retained", c.retained},
                    {"dropped", c.dropped},
                    {"judge_failed", c.judge_failed},
                    {"pending", c.pending},
                    {"corpus_digest", store.corpus_digest()}}
            .dump();
      });
  m.def("run_pipeline", &run, py::arg("config_path"), py::arg("stages") = std::vector<std::string>{},
        py::arg("stub_gateway") = false, py::arg("run_id") = py::none(), py::arg("max_parallel") = py::none());
}
