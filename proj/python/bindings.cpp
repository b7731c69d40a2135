// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Python bindings. Structured values cross the boundary as JSON text so the
// binding layer stays thin; the envforge package wraps these in dict-friendly
// helpers.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "envforge/domain_graph.hpp"
#include "envforge/env_scaling.hpp"
#include "envforge/rng.hpp"
#include "envforge/rollout_sim.hpp"
#include "envforge/training_strategy.hpp"

namespace py = pybind11;
using namespace envforge;

namespace {

nlohmann::json parse(const std::string& text, const char* what) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument(std::string(what) + ": invalid JSON");
  return j;
}

DomainGenConfig gen_config_from(const nlohmann::json& j) {
  DomainGenConfig cfg;
  cfg.style = j.value("style", cfg.style);
  cfg.tool_count = j.value("tool_count", cfg.tool_count);
  cfg.table_count = j.value("table_count", cfg.table_count);
  cfg.edge_density = j.value("edge_density", cfg.edge_density);
  cfg.aux_ref_slots = j.value("aux_ref_slots", cfg.aux_ref_slots);
  return cfg;
}

SimMode mode_from(const std::string& mode) {
  if (mode == "sync") return SimMode::Sync;
  if (mode == "async") return SimMode::Async;
  throw std::invalid_argument("mode must be \"sync\" or \"async\"");
}

}  // namespace

PYBIND11_MODULE(_envforge, m) {
  m.doc() = "Synthetic tool-use environment generation and rollout simulation";
  m.attr("__version__") = "0.1.0";

  m.def("domain_styles", [] { return domain_styles(); },
        "Names of the selectable domain styles.");

  m.def(
      "generate_domain",
      [](uint64_t seed, const std::string& config_json) {
        const DomainGenConfig cfg = gen_config_from(parse(config_json, "config"));
        const auto [schema, graph] = generate_domain(seed, cfg);
        (void)schema;  // embedded in the graph
        return graph_to_json(graph).dump();
      },
      py::arg("seed"), py::arg("config_json") = "{}",
      "Generate a tool graph; returns the graph as JSON text.");

  m.def(
      "validate_toolset",
      [](const std::string& graph_json) {
        const ToolGraph graph = graph_from_json(parse(graph_json, "graph"));
        return validate_toolset(graph).to_json().dump();
      },
      py::arg("graph_json"),
      "Per-tool executability and edge-consistency report as JSON text.");

  m.def(
      "assemble_environment",
      [](const std::string& graph_json, const std::string& env_config_json, uint64_t seed) {
        const ToolGraph graph = graph_from_json(parse(graph_json, "graph"));
        const EnvConfig cfg = EnvConfig::from_json(parse(env_config_json, "env_config"));
        Rng rng(seed);
        return assemble_environment(graph, cfg, rng).to_json().dump();
      },
      py::arg("graph_json"), py::arg("env_config_json") = "{}", py::arg("seed") = 0,
      "Spawn an environment from a graph; returns the environment as JSON text.");

  m.def(
      "run_simulation",
      [](const std::string& cluster_json, const std::string& workload_json,
         const std::string& mode, uint64_t seed) {
        const ClusterConfig cluster = ClusterConfig::from_json(parse(cluster_json, "cluster"));
        const WorkloadModel workload = WorkloadModel::from_json(parse(workload_json, "workload"));
        const SimResult result = run_simulation(cluster, workload, mode_from(mode), seed);
        nlohmann::json out{{"metrics", result.metrics.to_json()}, {"events", result.events}};
        return out.dump();
      },
      py::arg("cluster_json") = "{}", py::arg("workload_json") = "{}", py::arg("mode") = "async",
      py::arg("seed") = 0, "Deterministic rollout simulation; returns metrics and events.");

  // Stateless numeric routines bind directly.
  m.def("group_advantages", &group_advantages, py::arg("rewards"));
  m.def("sequence_importance_ratio", &sequence_importance_ratio, py::arg("new_logp_sum"),
        py::arg("old_logp_sum"), py::arg("token_count"));
  m.def("allocate_budget", &allocate_budget, py::arg("values"), py::arg("total_rollouts"),
        py::arg("per_task_min"), py::arg("per_task_max"));
  m.def("oversampling_coefficient", &oversampling_coefficient, py::arg("pass_rate"),
        py::arg("k_max"));
  m.def("sliding_window_ppl", &sliding_window_ppl, py::arg("token_nlls"), py::arg("window") = 512);
  m.def("kcg_select", &kcg_select, py::arg("points"), py::arg("ppl_scores"), py::arg("k"));
  m.def(
      "fit_power_law",
      [](const std::vector<std::pair<double, double>>& points) {
        const PowerLawFit fit = fit_power_law(points);
        return std::map<std::string, double>{{"coefficient", fit.coefficient},
                                             {"exponent", fit.exponent},
                                             {"rms_log_residual", fit.rms_log_residual},
                                             {"x_min", fit.x_min},
                                             {"x_max", fit.x_max}};
      },
      py::arg("points"), "Least-squares power-law fit in log-log space.");
}
