// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0

#include "envforge/env_scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "envforge/errors.hpp"

namespace envforge {

namespace {

// Dependency-feasible candidates: tools outside the chain whose produced-by
// producers are all already in it. Sorted, so selection is deterministic.
std::vector<std::string> feasible_candidates(const ToolGraph& graph,
                                             const std::set<std::string>& in_chain) {
  std::vector<std::string> out;
  for (const auto& [id, spec] : graph.tools) {
    if (in_chain.count(id)) continue;
    bool ok = true;
    for (const auto& slot : spec.inputs) {
      if (slot.source == SlotSource::ProducedByTool && !in_chain.count(slot.producer)) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(id);
  }
  return out;
}

// Append-only seed rows so `spec` can execute under the canonical replay
// binding: every referenced table nonempty, every scan having a match.
void ensure_tool_rows(const ToolSpec& spec, const ToolGraph& graph, DatabaseState& db) {
  const DomainSchema& schema = graph.schema;
  auto table_empty = [&](const std::string& table) {
    auto it = db.tables.find(table);
    return it == db.tables.end() || it->second.empty();
  };
  for (const auto& slot : spec.inputs) {
    if (slot.value_kind != ValueKind::EntityId || slot.source == SlotSource::Constant) continue;
    if (!schema.entity_kinds.count(slot.entity_kind)) continue;
    const std::string& table = schema.entity_kinds.at(slot.entity_kind);
    if (table_empty(table)) {
      db.insert_row(table, schema,
                    {{"status", std::string("open")}, {"label", std::string("expansion_seed")}});
    }
  }
  for (const auto& table : spec.reads) {
    if (!schema.tables.count(table)) continue;
    // Targeted reads are covered by the entity-id loop above.
    bool targeted = false;
    for (const auto& slot : spec.inputs) {
      if (slot.value_kind == ValueKind::EntityId && schema.entity_kinds.count(slot.entity_kind) &&
          schema.entity_kinds.at(slot.entity_kind) == table) {
        targeted = true;
        break;
      }
    }
    if (targeted) continue;
    const ParamSlot* filter = nullptr;
    for (const auto& slot : spec.inputs) {
      if (slot.value_kind != ValueKind::Enum) continue;
      for (const auto& c : schema.tables.at(table)) {
        if (c.name == slot.name) {
          filter = &slot;
          break;
        }
      }
      if (filter) break;
    }
    if (filter == nullptr) {
      if (table_empty(table)) {
        db.insert_row(table, schema,
                      {{"status", std::string("open")}, {"label", std::string("expansion_seed")}});
      }
      continue;
    }
    if (filter->enum_values.empty()) continue;  // validation flags this elsewhere
    const std::string& want = filter->enum_values.front();
    bool match = false;
    auto it = db.tables.find(table);
    if (it != db.tables.end()) {
      for (const auto& [id, row] : it->second) {
        (void)id;
        auto cit = row.find(filter->name);
        if (cit != row.end() && cit->second == Value(want)) {
          match = true;
          break;
        }
      }
    }
    if (!match) {
      db.insert_row(table, schema,
                    {{"status", std::string("open")},
                     {"label", std::string("expansion_seed")},
                     {filter->name, want}});
    }
  }
}

std::string join_chain(const std::vector<std::string>& tools) {
  std::string s;
  for (size_t i = 0; i < tools.size(); ++i) {
    if (i) s += ",";
    s += tools[i];
  }
  return s;
}

}  // namespace

nlohmann::json EnvSubgraph::to_json() const {
  nlohmann::json chains = nlohmann::json::array();
  for (const auto& c : seed_chains) chains.push_back(c.to_json());
  return {{"included", included}, {"remaining", remaining}, {"seed_chains", chains}};
}

EnvSubgraph EnvSubgraph::from_json(const nlohmann::json& j) {
  EnvSubgraph s;
  s.included = j.at("included").get<std::set<std::string>>();
  s.remaining = j.at("remaining").get<std::set<std::string>>();
  for (const auto& c : j.at("seed_chains")) s.seed_chains.push_back(ToolChain::from_json(c));
  return s;
}

nlohmann::json Environment::to_json() const {
  nlohmann::json chains = nlohmann::json::array();
  for (const auto& c : gold_chains) chains.push_back(c.to_json());
  return {{"schema_version", 1},
          {"subgraph", subgraph.to_json()},
          {"db", db.to_json()},
          {"gold_chains", chains},
          {"complexity", complexity},
          {"provenance", provenance}};
}

Environment Environment::from_json(const nlohmann::json& j) {
  Environment e;
  e.subgraph = EnvSubgraph::from_json(j.at("subgraph"));
  e.db = DatabaseState::from_json(j.at("db"));
  for (const auto& c : j.at("gold_chains")) e.gold_chains.push_back(ToolChain::from_json(c));
  e.complexity = j.at("complexity").get<double>();
  e.provenance = j.at("provenance").get<std::vector<std::string>>();
  return e;
}

nlohmann::json EnvConfig::to_json() const {
  return {{"chain_len_min", chain_len_min},
          {"chain_len_max", chain_len_max},
          {"weights",
           {{"w1", weights.w1},
            {"w2", weights.w2},
            {"w3", weights.w3},
            {"c0", weights.c0},
            {"d0", weights.d0}}},
          {"tau", tau},
          {"lambda", lambda},
          {"expand_budget", expand_budget},
          {"min_tools", min_tools},
          {"strict_min_tools", strict_min_tools},
          {"max_seed_chains", max_seed_chains},
          {"difficulty_attempt_cap", difficulty_attempt_cap},
          {"difficulty_min_len", difficulty_min_len},
          {"difficulty_solver",
           {{"skill", difficulty_solver.skill},
            {"noise_handling", difficulty_solver.noise_handling},
            {"clarification_rate", difficulty_solver.clarification_rate}}}};
}

EnvConfig EnvConfig::from_json(const nlohmann::json& j) {
  EnvConfig c;
  c.chain_len_min = j.value("chain_len_min", c.chain_len_min);
  c.chain_len_max = j.value("chain_len_max", c.chain_len_max);
  if (j.count("weights")) {
    const auto& w = j.at("weights");
    c.weights.w1 = w.value("w1", c.weights.w1);
    c.weights.w2 = w.value("w2", c.weights.w2);
    c.weights.w3 = w.value("w3", c.weights.w3);
    c.weights.c0 = w.value("c0", c.weights.c0);
    c.weights.d0 = w.value("d0", c.weights.d0);
  }
  c.tau = j.value("tau", c.tau);
  c.lambda = j.value("lambda", c.lambda);
  c.expand_budget = j.value("expand_budget", c.expand_budget);
  c.min_tools = j.value("min_tools", c.min_tools);
  c.strict_min_tools = j.value("strict_min_tools", c.strict_min_tools);
  c.max_seed_chains = j.value("max_seed_chains", c.max_seed_chains);
  c.difficulty_attempt_cap = j.value("difficulty_attempt_cap", c.difficulty_attempt_cap);
  c.difficulty_min_len = j.value("difficulty_min_len", c.difficulty_min_len);
  if (j.count("difficulty_solver")) {
    const auto& s = j.at("difficulty_solver");
    c.difficulty_solver.skill = s.value("skill", c.difficulty_solver.skill);
    c.difficulty_solver.noise_handling =
        s.value("noise_handling", c.difficulty_solver.noise_handling);
    c.difficulty_solver.clarification_rate =
        s.value("clarification_rate", c.difficulty_solver.clarification_rate);
  }
  return c;
}

ToolChain sample_seed_chain(const ToolGraph& graph, const std::map<std::string, int>& usage_counts,
                            std::pair<int, int> length_range, Rng& rng) {
  const auto [min_len, max_len] = length_range;
  if (min_len < 1 || max_len < min_len) {
    throw std::invalid_argument("bad chain length range");
  }
  const int n = static_cast<int>(graph.node_count());
  if (min_len > n) {
    throw NoFeasibleChainError("graph of " + std::to_string(n) +
                               " tools admits no chain of length " + std::to_string(min_len));
  }
  const int target = static_cast<int>(rng.uniform_int(min_len, std::min(max_len, n)));

  ToolChain chain;
  chain.domain = graph.domain;
  std::set<std::string> in_chain;
  for (int step = 0; step < target; ++step) {
    std::vector<std::string> cands = feasible_candidates(graph, in_chain);
    if (cands.empty()) {
      // A DAG always exposes a feasible source while tools remain.
      throw std::logic_error("no feasible candidate; dependency graph is cyclic?");
    }
    std::vector<double> weights;
    weights.reserve(cands.size());
    for (const auto& id : cands) {
      auto it = usage_counts.find(id);
      const int used = it == usage_counts.end() ? 0 : it->second;
      weights.push_back(1.0 / (1.0 + used));
    }
    const std::string& pick = cands[rng.weighted_index(weights)];
    chain.tools.push_back(pick);
    in_chain.insert(pick);
  }
  return chain;
}

EnvSubgraph expand_chain(const ToolChain& seed_chain, const ToolGraph& graph, DatabaseState& db,
                         int budget) {
  EnvSubgraph sub;
  sub.seed_chains = {seed_chain};
  sub.included.insert(seed_chain.tools.begin(), seed_chain.tools.end());
  for (const auto& [id, spec] : graph.tools) {
    (void)spec;
    if (!sub.included.count(id)) sub.remaining.insert(id);
  }

  const int max_added = budget < 0 ? std::numeric_limits<int>::max() : budget;
  int added = 0;
  while (added < max_added) {
    // One breadth-first layer: all remaining tools whose produced-by inputs
    // are satisfied by what was included before this layer started.
    std::vector<std::string> layer;
    for (const auto& id : sub.remaining) {
      const ToolSpec& spec = graph.tools.at(id);
      bool ready = true;
      for (const auto& slot : spec.inputs) {
        if (slot.source == SlotSource::ProducedByTool && !sub.included.count(slot.producer)) {
          ready = false;
          break;
        }
      }
      if (ready) layer.push_back(id);
    }
    if (layer.empty()) break;
    for (const auto& id : layer) {
      if (added >= max_added) break;
      sub.included.insert(id);
      sub.remaining.erase(id);
      ensure_tool_rows(graph.tools.at(id), graph, db);
      ++added;
    }
  }
  return sub;
}

double complexity_score(const EnvSubgraph& sub, const ToolGraph& graph, double lambda) {
  const double v = static_cast<double>(sub.included.size());
  if (sub.included.size() <= 1) return v;
  size_t internal = 0;
  for (const auto& [a, b] : graph.edges) {
    if (sub.included.count(a) && sub.included.count(b)) ++internal;
  }
  const double density = 2.0 * static_cast<double>(internal) / (v * (v - 1.0));
  return v + lambda * density;
}

int chain_discovery_difficulty(const std::set<std::string>& remaining, const ToolGraph& graph,
                               const DatabaseState& db, const ScriptedSolver& solver,
                               int attempt_cap, Rng& rng, int min_len) {
  if (attempt_cap < 1) throw std::invalid_argument("attempt_cap must be >= 1");
  if (min_len < 1) throw std::invalid_argument("min_len must be >= 1");

  auto chain_ok = [&](const std::vector<std::string>& tools) {
    DatabaseState copy = db;
    ToolChain c{tools, graph.domain};
    return replay_chain(c, graph, copy).kind == ReplayOutcome::Kind::Ok;
  };

  for (int attempt = 1; attempt <= attempt_cap; ++attempt) {
    std::vector<std::string> chain;
    bool done = true;
    for (int step = 0; step < min_len; ++step) {
      std::vector<std::string> cands;
      for (const auto& id : remaining) {
        if (std::find(chain.begin(), chain.end(), id) == chain.end()) cands.push_back(id);
      }
      if (cands.empty()) {
        done = false;
        break;
      }
      std::string pick;
      if (rng.bernoulli(solver.skill)) {
        std::vector<std::string> feasible;
        for (const auto& id : cands) {
          std::vector<std::string> probe = chain;
          probe.push_back(id);
          if (chain_ok(probe)) feasible.push_back(id);
        }
        if (!feasible.empty()) {
          pick = feasible[rng.index(feasible.size())];
        }
      }
      if (pick.empty()) pick = cands[rng.index(cands.size())];
      chain.push_back(pick);
      if (!chain_ok(chain)) {
        done = false;
        break;
      }
    }
    if (done && !chain.empty()) return attempt;
  }
  return attempt_cap + 1;
}

std::pair<double, bool> spawn_decision(double c, int g, int d, const SpawnWeights& weights,
                                       double tau) {
  if (c < 0.0 || g < 0 || d < 0) throw std::invalid_argument("c, g, d must be nonnegative");
  if (weights.w1 < 0.0 || weights.w2 < 0.0 || weights.w3 < 0.0) {
    throw std::invalid_argument("spawn weights must be nonnegative");
  }
  if (weights.c0 <= 0.0 || weights.d0 <= 0.0) {
    throw std::invalid_argument("spawn scales c0, d0 must be positive");
  }
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau must lie in [0,1]");
  double p = weights.w1 * std::exp(-c / weights.c0) + weights.w2 / (1.0 + g) +
             weights.w3 * std::min(static_cast<double>(d) / weights.d0, 1.0);
  p = std::clamp(p, 0.0, 1.0);
  return {p, p > tau};
}

Environment assemble_environment(const ToolGraph& graph, const EnvConfig& config, Rng& rng,
                                 std::map<std::string, int>* usage_counts) {
  const int n = static_cast<int>(graph.node_count());
  if (config.strict_min_tools && n < config.min_tools) {
    throw GraphTooSmallError("graph has " + std::to_string(n) + " tools, need " +
                             std::to_string(config.min_tools));
  }
  std::map<std::string, int> local_usage;
  std::map<std::string, int>& usage = usage_counts != nullptr ? *usage_counts : local_usage;

  Environment env;
  env.db = DatabaseState::empty_for(graph.schema);
  std::set<std::string>& included = env.subgraph.included;

  auto incorporate = [&](const ToolChain& chain, bool expand) {
    augment_chain_db(chain, graph, env.db, rng);
    for (const auto& t : chain.tools) ++usage[t];
    if (expand) {
      EnvSubgraph grown = expand_chain(chain, graph, env.db, config.expand_budget);
      included.insert(grown.included.begin(), grown.included.end());
    } else {
      included.insert(chain.tools.begin(), chain.tools.end());
    }
    env.gold_chains.push_back(chain);
    env.subgraph.seed_chains.push_back(chain);
  };

  auto refresh_remaining = [&] {
    env.subgraph.remaining.clear();
    for (const auto& [id, spec] : graph.tools) {
      (void)spec;
      if (!included.count(id)) env.subgraph.remaining.insert(id);
    }
  };

  // Spawn loop: grow from seed chains while the decision rule says to.
  const std::pair<int, int> range{config.chain_len_min, config.chain_len_max};
  for (int spawn_i = 0; spawn_i < config.max_seed_chains; ++spawn_i) {
    ToolChain chain = sample_seed_chain(graph, usage, range, rng);
    incorporate(chain, /*expand=*/true);
    refresh_remaining();
    const double c = complexity_score(env.subgraph, graph, config.lambda);
    const int g = chain_discovery_difficulty(env.subgraph.remaining, graph, env.db,
                                             config.difficulty_solver,
                                             config.difficulty_attempt_cap, rng,
                                             config.difficulty_min_len);
    const int d = static_cast<int>(env.subgraph.remaining.size());
    const auto [p, spawn] = spawn_decision(c, g, d, config.weights, config.tau);
    std::ostringstream line;
    line << "seed " << spawn_i << ": chain=[" << join_chain(chain.tools) << "] included="
         << included.size() << " c=" << c << " g=" << g << " d=" << d << " p=" << p
         << " spawn=" << (spawn ? "yes" : "no");
    env.provenance.push_back(line.str());
    if (!spawn || env.subgraph.remaining.empty()) break;
  }

  // Fallback: incorporate additional moderate-size chains until the
  // environment carries at least min(min_tools, |graph|) tools.
  const size_t need = static_cast<size_t>(std::min(config.min_tools, n));
  for (int tries = 0; included.size() < need && tries < 64; ++tries) {
    ToolChain chain = sample_seed_chain(graph, usage, range, rng);
    const size_t before = included.size();
    incorporate(chain, /*expand=*/false);
    env.provenance.push_back("fallback chain: [" + join_chain(chain.tools) + "] included " +
                             std::to_string(before) + " -> " + std::to_string(included.size()));
  }
  // Deterministic finisher in case sampling keeps hitting included tools:
  // admit remaining tools whose dependencies are already satisfied.
  while (included.size() < need) {
    refresh_remaining();
    std::string pick;
    for (const auto& id : env.subgraph.remaining) {
      const ToolSpec& spec = graph.tools.at(id);
      bool ready = true;
      for (const auto& slot : spec.inputs) {
        if (slot.source == SlotSource::ProducedByTool && !included.count(slot.producer)) {
          ready = false;
          break;
        }
      }
      if (ready) {
        pick = id;
        break;
      }
    }
    if (pick.empty()) throw std::logic_error("no admissible tool during fallback");
    ensure_tool_rows(graph.tools.at(pick), graph, env.db);
    included.insert(pick);
    env.provenance.push_back("fallback tool: " + pick);
  }

  refresh_remaining();
  env.complexity = complexity_score(env.subgraph, graph, config.lambda);

  // Construction guarantee: every gold chain must replay against the final db.
  for (const auto& chain : env.gold_chains) {
    DatabaseState copy = env.db;
    auto outcome = replay_chain(chain, graph, copy);
    if (outcome.kind != ReplayOutcome::Kind::Ok) {
      throw std::logic_error("gold chain replay failed after assembly: " + outcome.detail);
    }
  }
  return env;
}

}  // namespace envforge
