// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "envforge/context.hpp"
#include "envforge/domain_graph.hpp"
#include "envforge/env_scaling.hpp"
#include "envforge/rollout_sim.hpp"
#include "envforge/task_runtime.hpp"

namespace envforge {

struct DomainsRunConfig {
  int count = 20;
  DomainGenConfig gen;
  // Explicit style list; when shorter than count, styles cycle with the
  // generated index mixed into the seed.
  std::vector<std::string> styles;
};

struct EnvsRunConfig {
  int count = 100;
  EnvConfig env;
  bool share_usage_counts = true;  // reuse-penalty shared across a batch
};

struct EpisodesRunConfig {
  int episodes_per_cell = 50;
  std::vector<double> skill_grid = {0.0, 0.5, 1.0};
  std::vector<int> noise_levels = {0, 1, 2};
  ScriptedSolver solver;  // noise_handling/clarification defaults
  EpisodeLimits limits;
  TokenCostModel tokens;
  ContextPolicy context;
  int max_envs = 8;  // episodes run against the first N built environments
};

struct SimRunConfig {
  ClusterConfig cluster;
  WorkloadModel workload;
  std::string mode = "compare";  // sync | async | compare
};

struct RunConfig {
  uint64_t seed = 1;
  std::string out_dir = "out";
  DomainsRunConfig domains;
  EnvsRunConfig envs;
  EpisodesRunConfig episodes;
  SimRunConfig sim;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

// Throws ConfigError on unreadable files, malformed JSON, or invalid fields.
RunConfig load_run_config(const std::string& path);

}  // namespace envforge
