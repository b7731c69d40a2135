// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Environment construction: seed-chain sampling weighted against reuse,
// dependency-safe breadth-first expansion, the spawn decision rule, and the
// minimum-size fallback.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "envforge/rng.hpp"
#include "envforge/tool_exec.hpp"

namespace envforge {

struct EnvSubgraph {
  std::set<std::string> included;
  std::set<std::string> remaining;
  std::vector<ToolChain> seed_chains;

  nlohmann::json to_json() const;
  static EnvSubgraph from_json(const nlohmann::json& j);
  bool operator==(const EnvSubgraph&) const = default;
};

struct Environment {
  EnvSubgraph subgraph;
  DatabaseState db;
  std::vector<ToolChain> gold_chains;
  double complexity = 0.0;
  std::vector<std::string> provenance;  // line-oriented construction log

  nlohmann::json to_json() const;
  static Environment from_json(const nlohmann::json& j);
};

struct SpawnWeights {
  double w1 = 0.2;  // complexity decay term
  double w2 = 0.4;  // discovery-difficulty term
  double w3 = 0.4;  // remaining-pool term
  double c0 = 30.0;
  double d0 = 40.0;
};

// Scripted stand-in for a strong solver; probabilities of correct behavior.
struct ScriptedSolver {
  double skill = 1.0;           // P(choose a dependency-feasible correct next tool)
  double noise_handling = 1.0;  // P(successful retry on tool failure)
  double clarification_rate = 1.0;
};

struct EnvConfig {
  int chain_len_min = 3;  // "moderate-size" chain bounds
  int chain_len_max = 6;
  SpawnWeights weights;
  double tau = 0.55;
  double lambda = 10.0;    // density weight in the complexity score
  int expand_budget = 12;  // nodes added per expansion; -1 = unbounded
  int min_tools = 20;
  bool strict_min_tools = false;
  int max_seed_chains = 32;  // hard stop for the spawn loop
  int difficulty_attempt_cap = 6;
  int difficulty_min_len = 1;
  ScriptedSolver difficulty_solver;  // solver profile used for g(D)

  nlohmann::json to_json() const;
  static EnvConfig from_json(const nlohmann::json& j);
};

// Samples a dependency-feasible chain; tool t is drawn with weight
// 1/(1+usage_counts[t]) among feasible candidates. Throws NoFeasibleChainError
// when the graph admits no chain of min length.
ToolChain sample_seed_chain(const ToolGraph& graph, const std::map<std::string, int>& usage_counts,
                            std::pair<int, int> length_range, Rng& rng);

// Breadth-first growth over dependency layers: a tool joins the next layer
// only when all of its produced-by inputs come from already-included tools.
// Rows for newly required user-provided slots are appended to db. With an
// unbounded budget the result is the dependency-closure fixed point.
EnvSubgraph expand_chain(const ToolChain& seed_chain, const ToolGraph& graph, DatabaseState& db,
                         int budget);

// c(E) = |V| + lambda * internal edge density; |V| alone when |V| <= 1.
double complexity_score(const EnvSubgraph& sub, const ToolGraph& graph, double lambda = 10.0);

// Randomized solver attempts until a valid executable chain (length >=
// min_len) is found within `remaining`; attempt_cap+1 = infeasible sentinel.
int chain_discovery_difficulty(const std::set<std::string>& remaining, const ToolGraph& graph,
                               const DatabaseState& db, const ScriptedSolver& solver,
                               int attempt_cap, Rng& rng, int min_len = 1);

// p = clamp01(w1*exp(-c/c0) + w2/(1+g) + w3*min(d/d0, 1)); spawn iff p > tau.
std::pair<double, bool> spawn_decision(double c, int g, int d, const SpawnWeights& weights,
                                       double tau);

// Full construction loop: sample seed chain -> instantiate -> expand -> spawn
// decision, then the fallback that incorporates further chains until the
// environment holds at least min(min_tools, |graph|) tools. `usage_counts`,
// when provided, is shared across environments and updated in place.
Environment assemble_environment(const ToolGraph& graph, const EnvConfig& config, Rng& rng,
                                 std::map<std::string, int>* usage_counts = nullptr);

}  // namespace envforge
