// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/run_config.hpp"

#include <fstream>

#include "envforge/errors.hpp"
#include "envforge/noise.hpp"

namespace envforge {

namespace {

nlohmann::json solver_to_json(const ScriptedSolver& s) {
  return {{"skill", s.skill},
          {"noise_handling", s.noise_handling},
          {"clarification_rate", s.clarification_rate}};
}

ScriptedSolver solver_from_json(const nlohmann::json& j) {
  ScriptedSolver s;
  s.skill = j.value("skill", s.skill);
  s.noise_handling = j.value("noise_handling", s.noise_handling);
  s.clarification_rate = j.value("clarification_rate", s.clarification_rate);
  return s;
}

nlohmann::json domain_gen_to_json(const DomainGenConfig& c) {
  return {{"style", c.style},
          {"tool_count", c.tool_count},
          {"table_count", c.table_count},
          {"edge_density", c.edge_density},
          {"aux_ref_slots", c.aux_ref_slots}};
}

DomainGenConfig domain_gen_from_json(const nlohmann::json& j) {
  DomainGenConfig c;
  c.style = j.value("style", c.style);
  c.tool_count = j.value("tool_count", c.tool_count);
  c.table_count = j.value("table_count", c.table_count);
  c.edge_density = j.value("edge_density", c.edge_density);
  c.aux_ref_slots = j.value("aux_ref_slots", c.aux_ref_slots);
  return c;
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void validate(const RunConfig& c) {
  check(!c.out_dir.empty(), "out_dir must be nonempty");
  check(c.domains.count >= 0, "domains.count must be nonnegative");
  check(c.domains.gen.tool_count >= 1, "domains.tool_count must be positive");
  check(c.domains.gen.table_count >= 1, "domains.table_count must be positive");
  check(c.envs.count >= 0, "envs.count must be nonnegative");
  check(c.envs.env.chain_len_min >= 1 && c.envs.env.chain_len_max >= c.envs.env.chain_len_min,
        "envs.chain length range invalid");
  check(c.episodes.episodes_per_cell >= 0, "episodes_per_cell must be nonnegative");
  check(!c.episodes.skill_grid.empty(), "skill_grid must be nonempty");
  for (double s : c.episodes.skill_grid) {
    check(s >= 0.0 && s <= 1.0, "skill_grid values must lie in [0,1]");
  }
  check(!c.episodes.noise_levels.empty(), "noise_levels must be nonempty");
  for (int lvl : c.episodes.noise_levels) {
    check(lvl >= 0 && lvl <= kMaxNoiseLevel, "noise_levels must lie in [0,4]");
  }
  check(c.episodes.max_envs >= 1, "episodes.max_envs must be positive");
  check(c.episodes.limits.max_turns >= 1 && c.episodes.limits.max_tokens >= 1,
        "episode limits must be positive");
  check(c.sim.mode == "sync" || c.sim.mode == "async" || c.sim.mode == "compare",
        "sim.mode must be sync, async, or compare");
  check(c.sim.workload.num_samples >= 1, "sim.workload.num_samples must be positive");
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  return {{"schema_version", 1},
          {"seed", seed},
          {"out_dir", out_dir},
          {"domains",
           {{"count", domains.count},
            {"gen", domain_gen_to_json(domains.gen)},
            {"styles", domains.styles}}},
          {"envs",
           {{"count", envs.count},
            {"env", envs.env.to_json()},
            {"share_usage_counts", envs.share_usage_counts}}},
          {"episodes",
           {{"episodes_per_cell", episodes.episodes_per_cell},
            {"skill_grid", episodes.skill_grid},
            {"noise_levels", episodes.noise_levels},
            {"solver", solver_to_json(episodes.solver)},
            {"limits", episodes.limits.to_json()},
            {"tokens", episodes.tokens.to_json()},
            {"context", episodes.context.to_json()},
            {"max_envs", episodes.max_envs}}},
          {"sim",
           {{"cluster", sim.cluster.to_json()},
            {"workload", sim.workload.to_json()},
            {"mode", sim.mode}}}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    if (j.count("domains")) {
      const auto& d = j.at("domains");
      c.domains.count = d.value("count", c.domains.count);
      if (d.count("gen")) c.domains.gen = domain_gen_from_json(d.at("gen"));
      c.domains.styles = d.value("styles", c.domains.styles);
    }
    if (j.count("envs")) {
      const auto& e = j.at("envs");
      c.envs.count = e.value("count", c.envs.count);
      if (e.count("env")) c.envs.env = EnvConfig::from_json(e.at("env"));
      c.envs.share_usage_counts = e.value("share_usage_counts", c.envs.share_usage_counts);
    }
    if (j.count("episodes")) {
      const auto& e = j.at("episodes");
      c.episodes.episodes_per_cell = e.value("episodes_per_cell", c.episodes.episodes_per_cell);
      c.episodes.skill_grid = e.value("skill_grid", c.episodes.skill_grid);
      c.episodes.noise_levels = e.value("noise_levels", c.episodes.noise_levels);
      if (e.count("solver")) c.episodes.solver = solver_from_json(e.at("solver"));
      if (e.count("limits")) c.episodes.limits = EpisodeLimits::from_json(e.at("limits"));
      if (e.count("tokens")) c.episodes.tokens = TokenCostModel::from_json(e.at("tokens"));
      if (e.count("context")) c.episodes.context = ContextPolicy::from_json(e.at("context"));
      c.episodes.max_envs = e.value("max_envs", c.episodes.max_envs);
    }
    if (j.count("sim")) {
      const auto& s = j.at("sim");
      if (s.count("cluster")) c.sim.cluster = ClusterConfig::from_json(s.at("cluster"));
      if (s.count("workload")) c.sim.workload = WorkloadModel::from_json(s.at("workload"));
      c.sim.mode = s.value("mode", c.sim.mode);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run config: ") + e.what());
  }
  validate(c);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse config file " + path + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

}  // namespace envforge
