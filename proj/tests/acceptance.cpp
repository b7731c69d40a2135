// Copyright 2026 The Envforge Authors
// SPDX-License-Identifier: Apache-2.0
//
// Release acceptance runner: thirteen criteria, one [PASS]/[FAIL] line each,
// nonzero exit when anything fails. Tolerances, significance levels, and
// runtime budgets are pinned here deliberately; changing them is a release
// decision, not a test tweak.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "envforge/context.hpp"
#include "envforge/domain_graph.hpp"
#include "envforge/env_scaling.hpp"
#include "envforge/errors.hpp"
#include "envforge/noise.hpp"
#include "envforge/rng.hpp"
#include "envforge/rollout_sim.hpp"
#include "envforge/task_runtime.hpp"
#include "envforge/tool_exec.hpp"
#include "envforge/training_strategy.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace envforge;
namespace fs = std::filesystem;

namespace {

struct Checker {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int g_failures = 0;

void run_criterion(int id, const std::string& name, const std::function<void(Checker&)>& fn) {
  Checker c;
  try {
    fn(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("unexpected exception: ") + e.what());
  }
  if (c.ok) {
    std::printf("[PASS] criterion %d: %s\n", id, name.c_str());
  } else {
    std::printf("[FAIL] criterion %d: %s (%s)\n", id, name.c_str(), c.detail.c_str());
    ++g_failures;
  }
  std::fflush(stdout);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

uint64_t label_seed(uint64_t base, const std::string& label) {
  return base ^ Rng::hash_str(label);
}

std::vector<ToolGraph> make_domains(int count, uint64_t base_seed, const DomainGenConfig& gen) {
  const auto& styles = domain_styles();
  std::vector<ToolGraph> graphs;
  for (int i = 0; i < count; ++i) {
    DomainGenConfig cfg = gen;
    cfg.style = styles[static_cast<size_t>(i) % styles.size()];
    graphs.push_back(generate_domain(label_seed(base_seed, "domain:" + std::to_string(i)), cfg).second);
  }
  return graphs;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ENVFORGE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(entry.path(), root).string()] = ss.str();
  }
  return files;
}

// --- criterion bodies -------------------------------------------------------

// 1,000 environments over 20 generated domains: the tool-count floor, gold
// replayability, and rubric soundness must hold without exception.
void criterion_environment_invariants(Checker& c) {
  const auto t0 = std::chrono::steady_clock::now();

  const std::vector<ToolGraph> graphs = make_domains(20, 0xace1, DomainGenConfig{});
  for (const auto& g : graphs) {
    c.require(validate_toolset(g).pass, "a generated domain failed toolset validation");
  }

  const EnvConfig env_cfg;  // 20-tool floor, moderate chains
  std::vector<std::map<std::string, int>> usage(graphs.size());
  const int kEnvs = 1000;
  int tools_ok = 0, exec_ok = 0, rubric_ok = 0;
  for (int e = 0; e < kEnvs; ++e) {
    const size_t d = static_cast<size_t>(e) % graphs.size();
    Rng rng(label_seed(0xace1, "env:" + std::to_string(e)));
    const Environment env = assemble_environment(graphs[d], env_cfg, rng, &usage[d]);

    const size_t need = std::min<size_t>(static_cast<size_t>(env_cfg.min_tools),
                                         graphs[d].node_count());
    if (env.subgraph.included.size() >= need) ++tools_ok;

    bool replayable = !env.gold_chains.empty();
    for (const auto& chain : env.gold_chains) {
      DatabaseState db = env.db;
      if (replay_chain(chain, graphs[d], db).kind != ReplayOutcome::Kind::Ok) {
        replayable = false;
        break;
      }
    }
    if (replayable) ++exec_ok;

    const Task task = generate_task(env, graphs[d], rng);
    if (validate_rubric(task, env, graphs[d], 2)) ++rubric_ok;
  }

  c.require(tools_ok == kEnvs, "tool-count floor violated: " + std::to_string(tools_ok) + "/1000");
  c.require(exec_ok == kEnvs, "gold replay failed: " + std::to_string(exec_ok) + "/1000");
  c.require(rubric_ok == kEnvs, "rubric soundness failed: " + std::to_string(rubric_ok) + "/1000");
  const double elapsed = seconds_since(t0);
  c.require(elapsed <= 120.0, "runtime " + std::to_string(elapsed) + "s over the 120s budget");
}

// On every graph of at most ten tools: gold chains must appear in the brute
// enumeration of replayable sequences, and unbounded expansion must equal the
// dependency closure.
void criterion_small_graph_oracles(Checker& c) {
  std::vector<ToolGraph> graphs = {testsupport::line_graph(), testsupport::two_roots_graph(),
                                   testsupport::star_graph(), testsupport::complete4_graph(),
                                   testsupport::ten_tool_graph()};
  DomainGenConfig small;
  small.tool_count = 8;
  small.table_count = 4;
  for (uint64_t seed : {21u, 22u}) graphs.push_back(generate_domain(seed, small).second);

  EnvConfig cfg;
  cfg.chain_len_min = 1;
  cfg.chain_len_max = 3;
  cfg.min_tools = 3;
  cfg.expand_budget = -1;
  cfg.max_seed_chains = 3;

  for (size_t gi = 0; gi < graphs.size(); ++gi) {
    const ToolGraph& g = graphs[gi];
    c.require(g.node_count() <= 10, "test graph exceeds the ten-tool bound");
    for (uint64_t s = 1; s <= 4; ++s) {
      Rng rng(s * 1000 + gi);
      const Environment env = assemble_environment(g, cfg, rng);
      const auto valid = oracles::enumerate_valid_chains(g, env.db, 3);
      for (const auto& chain : env.gold_chains) {
        c.require(chain.tools.size() <= 3, "gold chain longer than the enumeration cap");
        c.require(std::find(valid.begin(), valid.end(), chain.tools) != valid.end(),
                  "gold chain missing from the brute-force enumeration");

        DatabaseState db = env.db;
        const EnvSubgraph sub = expand_chain(chain, g, db, -1);
        const std::set<std::string> seed_set(chain.tools.begin(), chain.tools.end());
        c.require(sub.included == oracles::dependency_closure(g, seed_set),
                  "unbounded expansion differs from the dependency closure");
      }
    }
  }

  // A mutually dependent pair must stay outside every closure.
  const ToolGraph trap = testsupport::cycle_trap_graph();
  DatabaseState db = DatabaseState::empty_for(trap.schema);
  const EnvSubgraph sub = expand_chain(ToolChain{{"m_alpha"}, trap.domain}, trap, db, -1);
  c.require(sub.included == oracles::dependency_closure(trap, {"m_alpha"}),
            "cycle-trap expansion differs from the closure");
  c.require(!sub.included.count("x_cycle") && !sub.included.count("y_cycle"),
            "an inadmissible cyclic pair leaked into the expansion");
}

// Heap greedy must hit the exhaustive optimum of sum v_i * H(n_i) on every
// random instance of up to five tasks and a budget of up to ten.
void criterion_budget_optimality(Checker& c) {
  Rng rng(303);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(5));
    const int total = static_cast<int>(rng.index(11));
    std::vector<double> values;
    for (int i = 0; i < n; ++i) values.push_back(0.05 + 3.95 * rng.uniform01());

    int per_min = 0;
    int per_max = total;
    if (total >= n && rng.bernoulli(0.3)) per_min = 1;
    if (total > 0 && rng.bernoulli(0.3)) {
      per_max = std::min(total, per_min + 1 + static_cast<int>(rng.index(6)));
      if (n * per_max < total) per_max = total;  // keep the instance feasible
    }

    const std::vector<int> alloc = allocate_budget(values, total, per_min, per_max);
    int sum = 0;
    for (size_t i = 0; i < alloc.size(); ++i) {
      sum += alloc[i];
      c.require(alloc[i] >= per_min && alloc[i] <= per_max, "allocation out of bounds");
    }
    c.require(sum == total, "allocation does not exhaust the budget");

    const double got = oracles::budget_objective(values, alloc);
    const double want = oracles::exhaustive_budget_optimum(values, total, per_min, per_max);
    c.require(got == want, "greedy objective misses the exhaustive optimum");
  }
}

// Group-normalized advantages and the clipped sequence objective.
void criterion_sequence_objective_math(Checker& c) {
  Rng rng(404);
  for (int trial = 0; trial < 500; ++trial) {
    const size_t n = 2 + rng.index(7);
    std::vector<double> rewards;
    for (size_t i = 0; i < n; ++i) rewards.push_back(4.0 * rng.uniform01() - 2.0);
    const std::vector<double> adv = group_advantages(rewards);

    double sum = 0.0;
    for (double a : adv) sum += a;
    c.require(std::fabs(sum) < 1e-9, "advantages are not zero-mean");

    const double shift = 10.0 * rng.uniform01() - 5.0;
    const double scale = 0.25 + 4.0 * rng.uniform01();
    std::vector<double> shifted = rewards, scaled = rewards;
    for (size_t i = 0; i < n; ++i) {
      shifted[i] += shift;
      scaled[i] *= scale;
    }
    const std::vector<double> adv_shift = group_advantages(shifted);
    const std::vector<double> adv_scale = group_advantages(scaled);
    for (size_t i = 0; i < n; ++i) {
      c.require(std::fabs(adv[i] - adv_shift[i]) < 1e-9, "advantages are not shift invariant");
      c.require(std::fabs(adv[i] - adv_scale[i]) < 1e-9,
                "advantages are not positive-scale invariant");
    }
  }

  // Clip bounds: no contribution may exceed the trust-region cap.
  Rng rng2(405);
  for (int trial = 0; trial < 1000; ++trial) {
    const double eps = 0.05 + 0.3 * rng2.uniform01();
    const double advantage = 4.0 * rng2.uniform01() - 2.0;
    const double s = std::exp(2.0 * rng2.uniform01() - 1.0);
    const double contrib = oracles::gspo_contribution(s, advantage, eps);
    const double cap = std::max((1.0 - eps) * advantage, (1.0 + eps) * advantage);
    c.require(contrib <= s * advantage + 1e-12, "contribution exceeds the unclipped term");
    c.require(contrib <= cap + 1e-12, "contribution exceeds the clip cap");
  }

  // The grouped objective equals the per-trajectory oracle assembly.
  Rng rng3(406);
  for (int trial = 0; trial < 200; ++trial) {
    const double eps = 0.1 + 0.2 * rng3.uniform01();
    std::vector<TrajectoryGroup> groups(1 + rng3.index(3));
    for (auto& group : groups) {
      const size_t m = 2 + rng3.index(4);
      for (size_t i = 0; i < m; ++i) {
        TrajectoryStats t;
        t.reward = 2.0 * rng3.uniform01() - 1.0;
        t.token_count = 1 + static_cast<int64_t>(rng3.index(50));
        t.old_logp_sum = 0.0;
        t.new_logp_sum = (rng3.uniform01() - 0.5) * static_cast<double>(t.token_count);
        group.trajectories.push_back(t);
      }
    }
    double want = 0.0;
    for (const auto& group : groups) {
      std::vector<double> rewards;
      for (const auto& t : group.trajectories) rewards.push_back(t.reward);
      const std::vector<double> adv = group_advantages(rewards);
      double group_term = 0.0;
      for (size_t i = 0; i < group.trajectories.size(); ++i) {
        const auto& t = group.trajectories[i];
        const double s = sequence_importance_ratio(t.new_logp_sum, t.old_logp_sum, t.token_count);
        group_term += oracles::gspo_contribution(s, adv[i], eps);
      }
      want += group_term / static_cast<double>(group.trajectories.size());
    }
    want /= static_cast<double>(groups.size());
    c.require(std::fabs(gspo_objective(groups, eps) - want) < 1e-9,
              "grouped objective differs from the oracle assembly");
  }

  // Length invariance of the ratio at a fixed per-token log ratio.
  for (double rho : {-0.7, -0.01, 0.3, 1.1}) {
    const double base = sequence_importance_ratio(rho, 0.0, 1);
    for (int64_t tokens : {7LL, 100LL, 5000LL}) {
      const double s = sequence_importance_ratio(rho * static_cast<double>(tokens), 0.0, tokens);
      c.require(std::fabs(s - base) < 1e-9, "ratio depends on sequence length");
    }
  }
}

// Heavy-tailed workloads must show the asynchronous throughput advantage on
// every seed; a constant workload must show parity.
void criterion_async_throughput(Checker& c) {
  const auto t0 = std::chrono::steady_clock::now();

  ClusterConfig cluster;  // 8 devices, batch 32, unit train step, lag 2
  cluster.kv_blocks_per_device = 8192;  // headroom for tail-length sequences
  const WorkloadModel tail;  // 512 samples, lognormal decode, Pareto env wait

  double min_ratio = std::numeric_limits<double>::infinity();
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    const SimResult a = run_simulation(cluster, tail, SimMode::Async, seed);
    const SimResult s = run_simulation(cluster, tail, SimMode::Sync, seed);
    c.require(a.metrics.makespan <= s.metrics.makespan,
              "async makespan exceeded sync on seed " + std::to_string(seed));
    min_ratio = std::min(min_ratio, a.metrics.samples_per_sec / s.metrics.samples_per_sec);
  }
  c.require(min_ratio >= 1.5,
            "worst-seed speedup " + std::to_string(min_ratio) + " below the 1.5x floor");

  // Without tails the two modes must agree. A trainer-bound step keeps the
  // per-batch pipeline drain (the only structural difference) negligible.
  ClusterConfig flat_cluster = cluster;
  flat_cluster.train_step_time = 20.0;
  WorkloadModel flat;
  flat.prompt_tokens = {DistSpec::Kind::Constant, 512.0, 0.0};
  flat.decode_tokens = {DistSpec::Kind::Constant, 120.0, 0.0};
  flat.env_latency = {DistSpec::Kind::Constant, 0.15, 0.0};
  flat.turns = {DistSpec::Kind::Constant, 2.0, 0.0};
  const SimResult fa = run_simulation(flat_cluster, flat, SimMode::Async, 7);
  const SimResult fsy = run_simulation(flat_cluster, flat, SimMode::Sync, 7);
  const double parity = fa.metrics.samples_per_sec / fsy.metrics.samples_per_sec;
  c.require(parity >= 0.95 && parity <= 1.05,
            "constant-workload ratio " + std::to_string(parity) + " outside [0.95, 1.05]");

  const double elapsed = seconds_since(t0);
  c.require(elapsed <= 60.0, "runtime " + std::to_string(elapsed) + "s over the 60s budget");
}

// The load-ratio reference points: one continuous request on a capacity-4
// device is exactly 0.25; an idle device is exactly 0.
void criterion_load_ratio_reference(Checker& c) {
  const OccupancyTimeline busy{{{0.0, 1}}, 10.0};
  c.require(request_load_ratio({busy}, 4) == 0.25, "continuous request ratio is not 0.25");
  const OccupancyTimeline idle{{}, 10.0};
  c.require(request_load_ratio({idle}, 4) == 0.0, "idle device ratio is not 0");
}

// Host-side swapping must eliminate recomputation; with it disabled the same
// over-capacity workload must recompute.
void criterion_kv_swapping(Checker& c) {
  ClusterConfig cluster;
  cluster.gen_devices = 1;
  cluster.device_capacity = 1;
  cluster.initial_capacity = 1;
  cluster.first_balance_time = 0.0;
  cluster.kv_blocks_per_device = 8;
  cluster.kv_block_tokens = 16;
  cluster.train_batch_size = 1;
  cluster.train_step_time = 0.01;

  WorkloadModel wl;
  wl.num_samples = 2;
  wl.num_domains = 1;
  wl.prompt_tokens = {DistSpec::Kind::Constant, 64.0, 0.0};
  wl.decode_tokens = {DistSpec::Kind::Constant, 32.0, 0.0};
  wl.env_latency = {DistSpec::Kind::Constant, 0.1, 0.0};
  wl.turns = {DistSpec::Kind::Constant, 2.0, 0.0};

  auto count_events = [](const SimResult& r, const std::string& name) {
    int64_t n = 0;
    for (const auto& ev : r.events) {
      if (ev.at("event") == name) ++n;
    }
    return n;
  };

  const SimResult swapped = run_simulation(cluster, wl, SimMode::Async, 1);
  c.require(swapped.metrics.trained == 2, "swap-enabled run did not finish");
  c.require(swapped.metrics.kv_recomputations == 0, "recomputation despite swapping");
  c.require(count_events(swapped, "kv_recompute") == 0, "recompute events despite swapping");
  c.require(count_events(swapped, "kv_swap_out") > 0, "over-capacity run never swapped");

  cluster.cpu_swap.enabled = false;
  const SimResult recomputed = run_simulation(cluster, wl, SimMode::Async, 1);
  c.require(recomputed.metrics.trained == 2, "swap-disabled run did not finish");
  c.require(recomputed.metrics.kv_recomputations > 0, "no recomputation with swapping off");
  c.require(count_events(recomputed, "kv_recompute") == recomputed.metrics.kv_recomputations,
            "recompute event count disagrees with the metric");
}

// Every trained sample must respect the configured version-lag bound over a
// ten-thousand-sample run.
void criterion_staleness_bound(Checker& c) {
  ClusterConfig cluster;
  cluster.kv_blocks_per_device = 8192;
  WorkloadModel wl;
  wl.num_samples = 10000;
  wl.decode_tokens = {DistSpec::Kind::LogNormal, 4.0, 0.8};
  wl.env_latency = {DistSpec::Kind::Pareto, 0.05, 1.2};
  wl.turns = {DistSpec::Kind::Uniform, 1.0, 3.0};

  for (int lag : {1, 2}) {
    cluster.max_version_lag = lag;
    const SimResult r = run_simulation(cluster, wl, SimMode::Async, 8);
    int64_t admits = 0;
    for (const auto& ev : r.events) {
      if (ev.at("event") != "admit") continue;
      ++admits;
      c.require(ev.at("payload").at("lag").get<int>() <= lag, "an admitted sample exceeded the lag bound");
    }
    c.require(admits == r.metrics.trained, "admit events disagree with the trained count");
    c.require(r.metrics.staleness_max <= lag, "staleness_max exceeds the bound");
    c.require(r.metrics.generated == 10000, "lost samples");
    c.require(r.metrics.trained + r.metrics.rejected_stale + r.metrics.in_flight == 10000,
              "sample conservation violated");
  }
}

// Noise must never break solvability, must degrade pass rates monotonically,
// and the curriculum must escalate monotonically.
void criterion_noise_pipeline(Checker& c) {
  // (a) Max-level profiles keep every task solvable within a retry budget.
  const std::vector<ToolGraph> graphs = make_domains(5, 0x901e, DomainGenConfig{});
  const EnvConfig env_cfg;
  std::vector<std::map<std::string, int>> usage(graphs.size());
  const NoiseProfile worst = NoiseProfile::for_level(kMaxNoiseLevel);
  int solvable = 0;
  for (int e = 0; e < 200; ++e) {
    const size_t d = static_cast<size_t>(e) % graphs.size();
    Rng rng(label_seed(0x901e, "pair:" + std::to_string(e)));
    const Environment env = assemble_environment(graphs[d], env_cfg, rng, &usage[d]);
    const Task task = generate_task(env, graphs[d], rng);
    if (verify_solvability(env, graphs[d], task, worst, 2)) ++solvable;
  }
  c.require(solvable == 200, "solvability broke under max noise: " + std::to_string(solvable) + "/200");

  // (b) Pass rate may never significantly increase with the noise level.
  ScriptedSolver solver;
  solver.skill = 0.8;
  solver.noise_handling = 0.7;
  solver.clarification_rate = 0.8;
  EpisodeLimits limits;
  limits.max_turns = 40;
  ContextPolicy ctx;
  ctx.kind = ContextPolicyKind::None;
  ctx.max_turns = 100000;
  const TokenCostModel tokens;

  std::vector<Environment> envs;
  for (int i = 0; i < 4; ++i) {
    Rng rng(label_seed(0x90eb, "env:" + std::to_string(i)));
    envs.push_back(assemble_environment(graphs[static_cast<size_t>(i)], env_cfg, rng));
  }

  const int kPerLevel = 2000;
  std::vector<std::pair<int, int>> passes_trials;
  for (int level = 0; level <= kMaxNoiseLevel; ++level) {
    const NoiseProfile profile = NoiseProfile::for_level(level);
    int passes = 0;
    for (int ep = 0; ep < kPerLevel; ++ep) {
      const size_t d = static_cast<size_t>(ep) % envs.size();
      Rng rng(label_seed(0x3b5, "ep:" + std::to_string(level) + ":" + std::to_string(ep)));
      Task task = generate_task(envs[d], graphs[d], rng);
      if (level > 0) task = inject_instruction_noise(task, level, rng);
      const auto [traj, report] = run_episode(envs[d], graphs[d], task, solver, profile, ctx,
                                              limits, tokens, rng);
      passes += report.reward;
    }
    passes_trials.emplace_back(passes, kPerLevel);
  }
  c.require(oracles::monotone_nonincreasing_rates(passes_trials, 2.326),
            "pass rates increased significantly with noise");
  c.require(passes_trials.front().first > passes_trials.back().first,
            "max noise did not depress the pass rate at all");

  // (c) The curriculum level never decreases, never skips, never overshoots.
  CurriculumState state;
  Rng crng(909);
  int last = state.current_level;
  for (int step = 0; step < 200; ++step) {
    const double clean = 0.5 + 0.5 * crng.uniform01();
    const double noisy = std::max(0.0, clean - 0.3 * crng.uniform01());
    state = curriculum_step(state, clean, noisy);
    c.require(state.current_level >= last, "curriculum level decreased");
    c.require(state.current_level <= last + 1, "curriculum level skipped a step");
    c.require(state.current_level <= state.max_level, "curriculum exceeded its maximum");
    last = state.current_level;
  }
  CurriculumState climb;
  for (int step = 0; step < 10; ++step) climb = curriculum_step(climb, 0.9, 0.89);
  c.require(climb.current_level == climb.max_level, "small gaps failed to reach the top level");
}

// Hybrid context management must cover the union of what summarization and
// discarding achieve alone; the summarize trigger fires strictly above the
// threshold; summarization must not change outcomes for a perfect solver.
void criterion_context_management(Checker& c) {
  // Trigger point: strictly greater than the token threshold.
  ContextPolicy summary_policy;
  summary_policy.kind = ContextPolicyKind::Summary;
  ContextState at_threshold;
  at_threshold.live_tokens = 80000;
  c.require(apply_policy(at_threshold, summary_policy) == ContextAction::None,
            "summarize fired at exactly the threshold");
  at_threshold.live_tokens = 80001;
  c.require(apply_policy(at_threshold, summary_policy) == ContextAction::Summarize,
            "summarize did not fire just above the threshold");

  // Long-horizon workload: token-heavy results and multi-chain plans, so the
  // episode dies without context management.
  const std::vector<ToolGraph> graphs = make_domains(4, 0xc0de, DomainGenConfig{});
  const EnvConfig env_cfg;
  std::vector<std::map<std::string, int>> usage(graphs.size());

  ScriptedSolver solver;  // perfect execution isolates the context effects
  EpisodeLimits limits;
  limits.max_turns = 400;
  limits.max_tokens = 16000;
  TokenCostModel tokens;
  tokens.result_scale = 150.0;

  ContextPolicy base;
  base.summary_threshold_tokens = 6000;
  base.max_turns = 10;

  const int kEpisodes = 60;
  int pass_none = 0, pass_summary = 0, pass_discard = 0, pass_hybrid = 0, pass_union = 0;
  for (int i = 0; i < kEpisodes; ++i) {
    const size_t d = static_cast<size_t>(i) % graphs.size();
    Rng env_rng(label_seed(0xc0de, "env:" + std::to_string(i)));
    const Environment env = assemble_environment(graphs[d], env_cfg, env_rng, &usage[d]);
    const Task task = generate_task(env, graphs[d], env_rng);

    auto reward_with = [&](ContextPolicyKind kind) {
      ContextPolicy policy = base;
      policy.kind = kind;
      Rng rng(label_seed(0xc0de, "run:" + std::to_string(i)));
      return run_episode(env, graphs[d], task, solver, NoiseProfile::for_level(0), policy, limits,
                         tokens, rng)
          .second.reward;
    };
    const int none = reward_with(ContextPolicyKind::None);
    const int summ = reward_with(ContextPolicyKind::Summary);
    const int disc = reward_with(ContextPolicyKind::DiscardAll);
    const int hybr = reward_with(ContextPolicyKind::Hybrid);

    pass_none += none;
    pass_summary += summ;
    pass_discard += disc;
    pass_hybrid += hybr;
    const int in_union = (summ || disc) ? 1 : 0;
    pass_union += in_union;
    c.require(hybr >= in_union, "hybrid lost an episode that summary or discard completed");
  }
  c.require(pass_hybrid >= pass_union, "hybrid completions below the union");
  c.require(pass_none < pass_hybrid,
            "workload is not long-horizon: unmanaged context lost nothing");
  (void)pass_summary;
  (void)pass_discard;

  // Losslessness: with a perfect solver, summarizing aggressively must leave
  // every reward unchanged.
  ContextPolicy none_policy;
  none_policy.kind = ContextPolicyKind::None;
  none_policy.max_turns = 100000;
  ContextPolicy tight_summary;
  tight_summary.kind = ContextPolicyKind::Summary;
  tight_summary.summary_threshold_tokens = 2000;
  tight_summary.max_turns = 100000;
  const EpisodeLimits loose;
  const TokenCostModel plain_tokens;

  int mismatched = 0;
  for (int i = 0; i < 100; ++i) {
    const size_t d = static_cast<size_t>(i) % graphs.size();
    Rng env_rng(label_seed(0x1055, "lossless:" + std::to_string(i)));
    const Environment env = assemble_environment(graphs[d], env_cfg, env_rng, &usage[d]);
    const Task task = generate_task(env, graphs[d], env_rng);

    Rng rng_a(label_seed(0xbee, "a:" + std::to_string(i)));
    Rng rng_b(label_seed(0xbee, "a:" + std::to_string(i)));
    const int plain = run_episode(env, graphs[d], task, solver, NoiseProfile::for_level(0),
                                  none_policy, loose, plain_tokens, rng_a)
                          .second.reward;
    const int summarized = run_episode(env, graphs[d], task, solver, NoiseProfile::for_level(0),
                                       tight_summary, loose, plain_tokens, rng_b)
                               .second.reward;
    if (plain != summarized) ++mismatched;
  }
  c.require(mismatched == 0,
            "summarization changed rewards on " + std::to_string(mismatched) + "/100 runs");
}

// Selection metrics must match brute force bit for bit.
void criterion_data_selection(Checker& c) {
  Rng rng(1111);
  for (int t = 0; t < 1000; ++t) {
    const size_t n = 1 + rng.index(64);
    std::vector<double> nlls;
    for (size_t i = 0; i < n; ++i) nlls.push_back(3.0 * rng.uniform01());
    const int window = 1 + static_cast<int>(rng.index(70));
    if (sliding_window_ppl(nlls, window) !=
        oracles::brute_sliding_ppl(nlls, static_cast<size_t>(window))) {
      c.require(false, "sliding-window perplexity differs from brute force");
      return;
    }
  }

  Rng prng(1112);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::vector<double>> points(20, std::vector<double>(4));
    for (auto& p : points) {
      for (double& x : p) x = 10.0 * prng.uniform01();
    }
    const std::vector<double> uniform(points.size(), 1.0);
    for (size_t k : {1u, 5u, 20u}) {
      if (kcg_select(points, uniform, k) != oracles::plain_kcg(points, k)) {
        c.require(false, "uniform-score selection differs from plain k-center greedy");
        return;
      }
    }
  }
}

// Power-law fitting: exact on noiseless data, exponent within 0.02 under
// log-normal noise of sigma 0.05 with fifty points.
void criterion_power_law_fit(Checker& c) {
  const std::vector<std::pair<double, double>> laws = {{3.0, 1.5}, {10.0, -1.0}, {0.5, 0.25}};
  for (const auto& [a, b] : laws) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 8; ++i) {
      const double x = std::pow(10.0, 1.0 + 0.75 * i);
      pts.emplace_back(x, a * std::pow(x, b));
    }
    const PowerLawFit fit = fit_power_law(pts);
    c.require(std::fabs(fit.exponent - b) < 1e-9, "noiseless exponent off");
    c.require(std::fabs(fit.coefficient - a) / a < 1e-9, "noiseless coefficient off");
    c.require(fit.rms_log_residual < 1e-9, "noiseless residual nonzero");
  }

  Rng rng(1212);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = 0.5 + 5.0 * rng.uniform01();
    const double b = 3.0 * rng.uniform01() - 1.5;
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 50; ++i) {
      const double x = std::pow(10.0, 2.0 + 6.0 * i / 49.0);
      pts.emplace_back(x, a * std::pow(x, b) * rng.lognormal(0.0, 0.05));
    }
    const PowerLawFit fit = fit_power_law(pts);
    c.require(std::fabs(fit.exponent - b) <= 0.02, "noisy exponent outside +/-0.02");
  }
}

// Two full pipeline runs from one config and seed must be byte-identical.
void criterion_pipeline_determinism(Checker& c) {
  const fs::path scratch = fs::temp_directory_path() / "envforge_acceptance_determinism";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  auto config_for = [&](const fs::path& out) {
    return nlohmann::json{
        {"seed", 17},
        {"out_dir", out.string()},
        {"domains", {{"count", 2}, {"gen", {{"tool_count", 24}, {"table_count", 4}}}}},
        {"envs", {{"count", 2}, {"env", {{"chain_len_min", 2}, {"chain_len_max", 4}, {"min_tools", 8}}}}},
        {"episodes",
         {{"episodes_per_cell", 1}, {"skill_grid", {0.5, 1.0}}, {"noise_levels", {0, 2}}, {"max_envs", 1}}},
        {"sim",
         {{"cluster", {{"gen_devices", 2}, {"train_batch_size", 1}, {"train_step_time", 0.5}}},
          {"workload",
           {{"num_samples", 3},
            {"num_domains", 1},
            {"prompt_tokens", {{"kind", "constant"}, {"a", 1000.0}}},
            {"decode_tokens", {{"kind", "constant"}, {"a", 500.0}}},
            {"env_latency", {{"kind", "constant"}, {"a", 0.25}}},
            {"turns", {{"kind", "constant"}, {"a", 2.0}}}}},
          {"mode", "compare"}}}};
  };

  for (const std::string leg : {"a", "b"}) {
    const fs::path out = scratch / leg;
    const fs::path cfg = scratch / ("config_" + leg + ".json");
    std::ofstream(cfg) << config_for(out).dump(2) << "\n";
    for (const std::string sub : {"gen-domains", "build-envs", "run-episodes", "simulate", "report"}) {
      const int rc = run_cli(sub + " --config " + cfg.string());
      c.require(rc == 0, sub + " exited " + std::to_string(rc));
      if (!c.ok) return;
    }
  }

  const auto tree_a = read_tree(scratch / "a");
  const auto tree_b = read_tree(scratch / "b");
  c.require(!tree_a.empty(), "first run produced no artifacts");
  c.require(tree_a.size() == tree_b.size(), "runs produced different file sets");
  for (const auto& [rel, bytes] : tree_a) {
    const auto it = tree_b.find(rel);
    c.require(it != tree_b.end(), "missing in second run: " + rel);
    if (it != tree_b.end()) {
      c.require(it->second == bytes, "byte difference in " + rel);
    }
  }
}

}  // namespace

int main() {
  run_criterion(1, "environment invariants at scale", criterion_environment_invariants);
  run_criterion(2, "small-graph oracle equivalence", criterion_small_graph_oracles);
  run_criterion(3, "budget allocation optimality", criterion_budget_optimality);
  run_criterion(4, "sequence objective math", criterion_sequence_objective_math);
  run_criterion(5, "async throughput advantage", criterion_async_throughput);
  run_criterion(6, "load ratio reference points", criterion_load_ratio_reference);
  run_criterion(7, "kv swapping eliminates recomputation", criterion_kv_swapping);
  run_criterion(8, "staleness bound at scale", criterion_staleness_bound);
  run_criterion(9, "noise solvability and monotonicity", criterion_noise_pipeline);
  run_criterion(10, "context policy dominance and losslessness", criterion_context_management);
  run_criterion(11, "data selection matches brute force", criterion_data_selection);
  run_criterion(12, "power law recovery", criterion_power_law_fit);
  run_criterion(13, "pipeline determinism", criterion_pipeline_determinism);

  if (g_failures > 0) {
    std::printf("%d of 13 criteria failed\n", g_failures);
    return 1;
  }
  std::printf("all 13 criteria passed\n");
  return 0;
}
